"""Named codes and their JSON descriptors."""

from __future__ import annotations

import json
from functools import lru_cache

from .algebraic import BCH378_261, RS63_43, BCHCode, RSCode
from .gf import FieldSpec
from .ldpc import LDPCCode, ldpc_construct

DEFAULT_LDPC_SEED = 2024

_FIXED = {
    "rs63_43": RS63_43,
    "bch378_261": BCH378_261,
}


def describe(code) -> dict:
    """Structured descriptor sufficient to rebuild ``code``."""
    if isinstance(code, RSCode):
        return {
            "code_id": code.code_id, "kind": "rs", "n": code.n, "k": code.k, "t": code.t,
            "field_degree": code.field.extension_degree,
            "primitive_polynomial": code.field.primitive_polynomial,
        }
    if isinstance(code, BCHCode):
        return {
            "code_id": code.code_id, "kind": "bch", "n": code.n, "k": code.k, "t": code.t,
            "field_degree": code.field.extension_degree,
            "primitive_polynomial": code.field.primitive_polynomial,
        }
    if isinstance(code, LDPCCode):
        return {
            "code_id": code.code_id, "kind": "ldpc", "n": code.n, "k": code.k,
            "dv": code.dv, "dc": code.dc, "seed": code.seed,
        }
    raise TypeError(f"unknown code type {type(code).__name__}")


def to_json(code) -> str:
    return json.dumps(describe(code), sort_keys=True)


def from_descriptor(desc: dict):
    kind = desc["kind"]
    if kind == "rs":
        f = FieldSpec(desc["field_degree"], desc["primitive_polynomial"])
        code = RSCode(f, desc["t"], code_id=desc.get("code_id", "rs"))
    elif kind == "bch":
        f = FieldSpec(desc["field_degree"], desc["primitive_polynomial"])
        code = BCHCode(f, desc["t"], desc["n"], code_id=desc.get("code_id", "bch"))
    elif kind == "ldpc":
        code = ldpc_construct(desc["n"], desc.get("dv", 3), desc.get("dc", 9),
                              seed=desc.get("seed", DEFAULT_LDPC_SEED),
                              code_id=desc.get("code_id", f"ldpc{desc['n']}"))
    else:
        raise ValueError(f"unknown code kind {kind!r}")
    if "k" in desc and code.k != desc["k"]:
        raise ValueError(f"descriptor dimension {desc['k']} disagrees with built code ({code.k})")
    return code


def from_json(text: str):
    return from_descriptor(json.loads(text))


@lru_cache(maxsize=16)
def get_code(code_id: str):
    """Resolve ``rs63_43``, ``bch378_261`` or ``ldpc<n>[@seed]`` (3,9)-regular."""
    if code_id in _FIXED:
        return _FIXED[code_id]
    if code_id.startswith("ldpc"):
        body = code_id[4:]
        seed = DEFAULT_LDPC_SEED
        if "@" in body:
            body, s = body.split("@", 1)
            seed = int(s)
        try:
            n = int(body)
        except ValueError:
            raise KeyError(f"unknown code id {code_id!r}") from None
        return ldpc_construct(n, 3, 9, seed=seed, code_id=code_id)
    raise KeyError(f"unknown code id {code_id!r}")


KNOWN_CODES = ("rs63_43", "bch378_261", "ldpc384", "ldpc9999")
