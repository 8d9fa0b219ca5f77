"""House allocation mechanisms with ties, oracles, and audit harnesses."""

from .model import (
    Instance,
    InstanceParseError,
    Matching,
    PreferenceList,
    SizeGuardError,
    StrictnessError,
    parse_instance,
    parse_matching,
    random_instance,
    rank,
    serialize_instance,
    serialize_matching,
    signature_of,
    strict_sublist_family,
    triangle_instance,
)
from .mechanisms import (
    TradingGraph,
    TradingState,
    build_trading_graph,
    find_augmenting_path,
    max_tg,
    sdm,
    sdmt1,
    sdmt2,
    trading,
)
from .oracles import (
    Coalition,
    EnvyGraph,
    brute_force_pareto_set,
    build_envy_graph,
    enumerate_pareto,
    enumerate_spm,
    is_pareto_optimal,
    is_strong_priority,
    max_weight_matching,
    order_for_matching,
)
from .randomized import (
    F,
    DualCertificate,
    RandomDraw,
    dual_certificate,
    estimate_expected_weight,
    g_eval,
    g_integral,
    rsdm_ties,
    threshold_yc,
)

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "InstanceParseError",
    "Matching",
    "PreferenceList",
    "SizeGuardError",
    "StrictnessError",
    "parse_instance",
    "parse_matching",
    "random_instance",
    "rank",
    "serialize_instance",
    "serialize_matching",
    "signature_of",
    "strict_sublist_family",
    "triangle_instance",
    "TradingGraph",
    "TradingState",
    "build_trading_graph",
    "find_augmenting_path",
    "max_tg",
    "sdm",
    "sdmt1",
    "sdmt2",
    "trading",
    "Coalition",
    "EnvyGraph",
    "brute_force_pareto_set",
    "build_envy_graph",
    "enumerate_pareto",
    "enumerate_spm",
    "is_pareto_optimal",
    "is_strong_priority",
    "max_weight_matching",
    "order_for_matching",
    "F",
    "DualCertificate",
    "RandomDraw",
    "dual_certificate",
    "estimate_expected_weight",
    "g_eval",
    "g_integral",
    "rsdm_ties",
    "threshold_yc",
    "__version__",
]
