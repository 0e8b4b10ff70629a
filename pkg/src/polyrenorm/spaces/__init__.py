"""Concrete sequence-space models: Nakano-type, Orlicz and hereditary-family spaces."""
from .descriptor import SUPPORT_CAP, SpaceDescriptor, norming_functional, piece_sup
from .hereditary import (HereditaryFamily, extreme_signed_indicators, hk_dual_norm, hk_norm,
                         hk_norm_with_member, hk_to_ck, isolates, schreier_family, signed_indicator,
                         singletons_family, strata)
from .luxemburg import luxemburg_norm, luxemburg_scale
from .nakano import NakanoDescriptor, nakano_modular, nakano_modular_bruteforce
from .orlicz import (GrowthBound, OrliczDescriptor, OrliczFunction, orlicz_dn, orlicz_limit_check,
                     orlicz_modular)

__all__ = [
    "SUPPORT_CAP", "SpaceDescriptor", "norming_functional", "piece_sup",
    "HereditaryFamily", "extreme_signed_indicators", "hk_dual_norm", "hk_norm", "hk_norm_with_member",
    "hk_to_ck", "isolates", "schreier_family", "signed_indicator", "singletons_family", "strata",
    "luxemburg_norm", "luxemburg_scale",
    "NakanoDescriptor", "nakano_modular", "nakano_modular_bruteforce",
    "GrowthBound", "OrliczDescriptor", "OrliczFunction", "orlicz_dn", "orlicz_limit_check",
    "orlicz_modular",
]
