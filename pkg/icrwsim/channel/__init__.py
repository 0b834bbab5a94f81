"""Vehicular channel: pathloss, tapped-delay-line fading and packet adjudication."""

from .fading import (FadingLink, LinkStore, Shadowing, ShadowingProcess, TapGenerator, link_gain_db,
                     synthesize_shadowing, synthesize_tap)
from .link import LinkBudget, LinkCurve, packet_error_probability, pathloss_db
from .models import (
    ChannelModel,
    DistanceCutoff,
    Emulated,
    Ideal,
    IidLoss,
    LosClass,
    LosMode,
    adjudicate,
    adjudicate_batch,
    channel_from_flat,
    channel_label,
    channel_to_flat,
    classify_los,
    parse_channel,
)
from .profiles import PROFILES, URBAN_LOS, URBAN_NLOS, SpectrumKind, Tap, TapProfile

__all__ = [
    "ChannelModel", "DistanceCutoff", "Emulated", "FadingLink", "Ideal", "IidLoss", "LinkBudget",
    "LinkCurve", "LinkStore", "LosClass", "LosMode", "PROFILES", "Shadowing", "ShadowingProcess",
    "SpectrumKind", "Tap", "TapGenerator",
    "TapProfile", "URBAN_LOS", "URBAN_NLOS", "adjudicate", "adjudicate_batch", "channel_from_flat",
    "channel_label", "channel_to_flat", "classify_los", "link_gain_db", "packet_error_probability",
    "parse_channel", "pathloss_db", "synthesize_shadowing", "synthesize_tap",
]
