"""Parse lifted LLVM IR text and normalize functions into token streams.

The scanner is deliberately line/token level: it extracts ``define`` blocks
and rewrites tokens so that lifter artifacts that vary across instruction
sets (SSA numbering, register names, stack offsets, integer widths,
instruction addresses) disappear, while opcodes, call targets and literal
operands survive.
"""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass

from .errors import ConfigError, LiftError, ParseError

# Name prefix the lifter assigns to functions without a symbol.
UNNAMED_PATTERN = re.compile(r"^function_[0-9a-fA-F]+$")

# Command template used when the input is a raw binary rather than .ll text.
DEFAULT_LIFTER_CMD = "retdec-decompiler --stop-after=bin2llvmir -o {out}.ll {binary}"
LIFTER_ENV_VAR = "BCD_LIFTER"

# General-purpose register names the lifter may emit as %-prefixed
# references: x86/x86-64, ARM, MIPS and PowerPC families.
_X86 = [
    "al", "ah", "ax", "eax", "rax", "bl", "bh", "bx", "ebx", "rbx",
    "cl", "ch", "cx", "ecx", "rcx", "dl", "dh", "dx", "edx", "rdx",
    "si", "sil", "esi", "rsi", "di", "dil", "edi", "rdi",
    "bp", "bpl", "ebp", "rbp", "sp", "spl", "esp", "rsp", "ip", "eip", "rip",
] + [f"r{n}{s}" for n in range(8, 16) for s in ("", "b", "w", "d")]
_ARM = [f"r{n}" for n in range(16)] + ["sl", "sb", "fp", "lr", "pc", "cpsr", "apsr"]
_MIPS = (
    ["zero", "at", "v0", "v1", "gp", "ra", "k0", "k1", "hi", "lo"]
    + [f"a{n}" for n in range(4)]
    + [f"t{n}" for n in range(10)]
    + [f"s{n}" for n in range(9)]
)
_PPC = [f"cr{n}" for n in range(8)] + ["ctr", "xer", "msr"]
REGISTER_NAMES = frozenset(_X86 + _ARM + _MIPS + _PPC)

# %5, %eax, %r11d ... -> %r   (rule 1: SSA references and register names)
_REG_RE = re.compile(
    r"%(?:\d+|" + "|".join(sorted(REGISTER_NAMES, key=len, reverse=True)) + r")(?![\w.])"
)

# %stack_var_-4, %global_var_804c034, %arg1, %dec_label_pc_8f0 -> sigil + base
# (rule 2: generated names carry offsets/addresses; keep only the kind)
_GENVAR_RE = re.compile(r"([%@])(stack_var|global_var|local_var|dec_label)(?![A-Za-z])[\w.\-]*")
_ARG_RE = re.compile(r"([%@])arg(?=[_\d])[\w.\-]*")

# i1/i16/i32/... possibly pointer-decorated (rule 3: integer widths differ
# across ISAs, so they are excised wherever they occur in a token)
_INTWIDTH_RE = re.compile(r"(?<![A-Za-z0-9_%@.])i\d+\*{0,3}(?![A-Za-z0-9_])")

# A token reduced to bracket/separator shrapnel after excision is dropped.
_SHRAPNEL_RE = re.compile(r"^[()\[\]{}<>,*]*$")

_LABEL_RE = re.compile(r"^[A-Za-z0-9._$\-]+:$")
_DEFINE_NAME_RE = re.compile(r'@("[^"]+"|[A-Za-z0-9._$\-]+)\s*\(')


@dataclass(frozen=True)
class IrFunction:
    """One extracted ``define`` block, verbatim."""

    name: str
    raw_body: str
    is_named: bool


@dataclass(frozen=True)
class IrModule:
    """All function definitions of one .ll file, in file order."""

    source_path: str
    arch_tag: str | None
    functions: tuple[IrFunction, ...]


@dataclass(frozen=True)
class TokenStream:
    """Ordered normalized tokens for one function."""

    tokens: tuple[str, ...]
    function_name: str
    source_path: str = ""
    arch_tag: str | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    def serialize(self) -> bytes:
        """Byte form consumed by the byte-oriented hashes: tokens joined by spaces."""
        return " ".join(self.tokens).encode("utf-8")


def _strip_comment(line: str) -> str:
    """Drop a trailing ``;`` comment, ignoring semicolons inside quotes."""
    if ";" not in line:
        return line
    in_quote = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif ch == ";" and not in_quote:
            return line[:i]
    return line


def normalize_instruction(line: str, keep_call_targets: bool = True) -> list[str]:
    """Normalize one IR instruction (or label) line into tokens.

    Applies, in order: SSA references and register names -> ``%r``;
    generated variable names -> their kind (``%stack_var`` etc.); integer
    width tokens excised; addresses, ``!``-metadata and comments dropped.
    Unknown constructs pass through unmodified.
    """
    line = _strip_comment(line).strip()
    if not line:
        return []
    if _LABEL_RE.match(line):
        return []  # labels encode instruction addresses

    out: list[str] = []
    for token in line.split():
        if token.startswith("!"):
            break  # !insn.addr and friends trail the instruction; drop the rest
        token = _REG_RE.sub("%r", token)
        token = _GENVAR_RE.sub(r"\1\2", token)
        token = _ARG_RE.sub(r"\1arg", token)
        token = _INTWIDTH_RE.sub("", token)
        if not keep_call_targets:
            token = re.sub(r'@("[^"]+"|[A-Za-z0-9._$\-]+)', "@fn", token)
        if _SHRAPNEL_RE.match(token):
            continue
        out.append(token)
    return out


def tokenize_function(
    func: IrFunction,
    source_path: str = "",
    arch_tag: str | None = None,
    keep_call_targets: bool = True,
) -> TokenStream:
    """Normalize a function body into its TokenStream.

    The ``define`` header and closing brace are excluded; label lines are
    dropped by normalization.
    """
    lines = func.raw_body.splitlines()
    tokens: list[str] = []
    for line in lines[1:]:  # skip the define header
        stripped = line.strip()
        if stripped == "}":
            continue
        tokens.extend(normalize_instruction(line, keep_call_targets=keep_call_targets))
    return TokenStream(
        tokens=tuple(tokens),
        function_name=func.name,
        source_path=source_path,
        arch_tag=arch_tag,
    )


def _count_braces(line: str) -> tuple[int, int]:
    """Count braces outside string quotes."""
    opens = closes = 0
    in_quote = False
    for ch in line:
        if ch == '"':
            in_quote = not in_quote
        elif not in_quote:
            if ch == "{":
                opens += 1
            elif ch == "}":
                closes += 1
    return opens, closes


def parse_module(ir_text: str, arch_tag: str | None = None, source_path: str = "") -> IrModule:
    """Extract all top-level ``define`` blocks from IR text.

    ``declare`` lines are not functions and are skipped. Duplicate names get
    ``#2``, ``#3`` ... suffixes so identities stay unique within the module.
    """
    functions: list[IrFunction] = []
    lines = ir_text.splitlines()
    i = 0
    n = len(lines)
    while i < n:
        stripped = lines[i].strip()
        if not stripped.startswith("define"):
            i += 1
            continue
        start = i
        m = _DEFINE_NAME_RE.search(_strip_comment(lines[i]))
        name = m.group(1).strip('"') if m else f"anonymous_{start + 1}"
        depth = 0
        body_lines: list[str] = []
        while i < n:
            opens, closes = _count_braces(_strip_comment(lines[i]))
            depth += opens - closes
            body_lines.append(lines[i])
            i += 1
            if depth == 0 and (opens or closes):
                break
        if depth != 0:
            raise ParseError(
                f"unbalanced braces in define block for @{name}", line=start + 1
            )
        raw_body = "\n".join(body_lines)
        if not raw_body.strip():
            continue
        functions.append(
            IrFunction(
                name=name,
                raw_body=raw_body,
                is_named=not UNNAMED_PATTERN.match(name),
            )
        )

    # de-duplicate names: second and later occurrences get #2, #3 ...
    seen: dict[str, int] = {}
    unique: list[IrFunction] = []
    for f in functions:
        seen[f.name] = seen.get(f.name, 0) + 1
        if seen[f.name] > 1:
            f = IrFunction(
                name=f"{f.name}#{seen[f.name]}", raw_body=f.raw_body, is_named=f.is_named
            )
        unique.append(f)
    return IrModule(source_path=source_path, arch_tag=arch_tag, functions=tuple(unique))


def base_name(name: str) -> str:
    """Strip the de-duplication suffix; this is the ground-truth label."""
    return name.split("#", 1)[0]


def tokenize_module(module: IrModule, keep_call_targets: bool = True) -> list[TokenStream]:
    return [
        tokenize_function(
            f,
            source_path=module.source_path,
            arch_tag=module.arch_tag,
            keep_call_targets=keep_call_targets,
        )
        for f in module.functions
    ]


def lift_binary(binary_path: str, lifter_cmd: str | None = None) -> str:
    """Return LLVM IR text for ``binary_path``.

    ``.ll`` inputs are read directly. Anything else is handed to the external
    lifter command template (``{binary}`` and ``{out}`` placeholders); the
    template defaults to RetDec and can be overridden by the ``BCD_LIFTER``
    environment variable or the ``lifter_cmd`` argument.
    """
    if binary_path.endswith(".ll"):
        with open(binary_path, encoding="utf-8") as fh:
            return fh.read()

    template = lifter_cmd or os.environ.get(LIFTER_ENV_VAR) or DEFAULT_LIFTER_CMD
    with tempfile.TemporaryDirectory(prefix="bcd-lift-") as tmp:
        out_base = os.path.join(tmp, "lifted")
        cmd = shlex.split(template.format(out=out_base, binary=binary_path))
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True)
        except FileNotFoundError as exc:
            raise ConfigError(
                f"lifter executable not found: {cmd[0]!r} (set {LIFTER_ENV_VAR} "
                "or pass --lifter to point at a working lifter)"
            ) from exc
        if proc.returncode != 0:
            raise LiftError(
                f"lifter exited with status {proc.returncode} for {binary_path}",
                diagnostics=(proc.stderr or proc.stdout or "").strip(),
            )
        out_path = out_base + ".ll"
        if not os.path.exists(out_path):
            raise LiftError(
                f"lifter produced no output file for {binary_path}",
                diagnostics=(proc.stderr or proc.stdout or "").strip(),
            )
        with open(out_path, encoding="utf-8") as fh:
            return fh.read()
