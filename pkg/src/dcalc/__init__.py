"""Exact level-m differential calculus: divided-power envelopes, the rings
D^(m), tube algebras and Frobenius level raising in explicit coordinates."""

from .arith import INF, PrimeCtx, exact_divide_by_p, factorial_valuation, valuation
from .dop import DiffOp, IdealSpec, apply, change_level, compose, is_horizontal
from .groebner import GroebnerBasis, buchberger, ideal_member
from .mpd import (
    Envelope,
    EnvelopeElt,
    delta_comult,
    env_change_level,
    env_mul,
    level_decompose,
    padic_binom,
    phi_poly,
    qfac_ratio,
    taylor_expand,
)
from .poly import GF, QQ, Polynomial, RingMap, ZMod, Zp, divided_derivative, multi_binom, reduce_mod, substitute
from .strat import (
    IsocSystem,
    StratModule,
    act,
    cocycle_check,
    frobenius_comparison,
    frobenius_pullback,
    horizontal_hom,
    integral_model,
    isoc_compat_check,
    quasi_nilpotent_check,
)
from .tube import (
    FrobLift,
    TubeCtx,
    TubeElt,
    analytic_strat_image,
    dm_act,
    env_to_tube,
    frobenius_tube_witness,
    from_witness,
    incl_power_map,
    membership,
    modp_iso,
    tube_to_env,
)

__version__ = "0.1.0"
