"""Finite fields, algebraic and LDPC codes, bit APPs and union bounds."""

from .algebraic import BCH378_261, RS63_43, BCHCode, RSCode, berlekamp_massey
from .bitapp import AppSource, BitAPP, LLRTable, bit_app_exact, bit_app_hard, bit_app_simplified
from .bounds import union_bound_bch, union_bound_rs
from .gf import GF64, GF512, FieldSpec
from .gray import gray_label, gray_unlabel
from .ldpc import LDPCCode, bp_decode_batch, ldpc_bp_decode, ldpc_construct
from .registry import get_code

__all__ = [
    "AppSource", "BCH378_261", "BCHCode", "BitAPP", "FieldSpec", "GF512", "GF64",
    "LDPCCode", "LLRTable", "RS63_43", "RSCode", "berlekamp_massey", "bit_app_exact",
    "bit_app_hard", "bit_app_simplified", "bp_decode_batch", "get_code", "gray_label",
    "gray_unlabel", "ldpc_bp_decode", "ldpc_construct", "union_bound_bch", "union_bound_rs",
]
