"""Cross-architecture binary code similarity toolkit.

Lifted LLVM IR is normalized into token streams, fingerprinted with
locality-sensitive hashes, and indexed in a MinHash inverted database that
can be searched from the CLI, over HTTP, or from the browser UI.
"""

__version__ = "0.1.0"
