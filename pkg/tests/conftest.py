import os
import random

import pytest

from bcd.ir_corpus import parse_module, tokenize_module, TokenStream

FIXTURES = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "fixtures"))


def load_fixture_module(name, arch):
    path = os.path.join(FIXTURES, name)
    with open(path, encoding="utf-8") as fh:
        return parse_module(fh.read(), arch_tag=arch, source_path=name)


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def arm_module():
    return load_fixture_module("rc4_arm.ll", "arm")


@pytest.fixture(scope="session")
def mips_module():
    return load_fixture_module("rc4_mips.ll", "mips")


@pytest.fixture(scope="session")
def x86_module():
    return load_fixture_module("rc4_x86.ll", "x86")


@pytest.fixture(scope="session")
def arm_streams(arm_module):
    return tokenize_module(arm_module)


@pytest.fixture(scope="session")
def mips_streams(mips_module):
    return tokenize_module(mips_module)


def make_random_stream(rng: random.Random, n_tokens: int, name: str, arch="arm") -> TokenStream:
    vocab = [f"op{k}" for k in range(40)] + ["%r", "%stack_var", "label", "call"]
    tokens = tuple(rng.choice(vocab) for _ in range(n_tokens))
    return TokenStream(tokens=tokens, function_name=name, source_path="synth.ll", arch_tag=arch)
