"""Exact finite-radius computations with mod p representations of GL2 over a p-adic field."""
from .gfq import GF, binom_mod_p, field, nu_p, nu_p_binom_prime_power
from .localring import LocalRing, Mat2Local, carry_P0, local_ring
from .weights import DigitWeight, ICharacter, SerreWeight, r_J_wJ, schedule_aJ, weight_set
from .induction import InducedElement, Region, TreeModel, TreeVertex
from .invariants import QuotientContext, enumerate_invariants, is_invariant, kz_closure
from .quotient import StagePlan, run_f2_ramified, run_unramified

__all__ = [
    "GF", "field", "binom_mod_p", "nu_p", "nu_p_binom_prime_power",
    "LocalRing", "Mat2Local", "carry_P0", "local_ring",
    "SerreWeight", "DigitWeight", "ICharacter", "weight_set", "r_J_wJ", "schedule_aJ",
    "TreeModel", "TreeVertex", "InducedElement", "Region",
    "QuotientContext", "enumerate_invariants", "is_invariant", "kz_closure",
    "StagePlan", "run_unramified", "run_f2_ramified",
]
