"""Security Reflex Function (SRF) signaling simulator for 5G-V2X."""

from .akaprime import AuthTranscript, MessageKind, SqnState, replay_check
from .errors import SrfSimError
from .keychain import KeyHierarchy, KeyLabel, build_hierarchy, kdf
from .metrics import SignalingLedger, savings_percent, total_cost
from .netmodel import Scenario, Topology, hop_distance, load_scenario, parse_scenario
from .simulator import run, step

__all__ = [
    "AuthTranscript", "KeyHierarchy", "KeyLabel", "MessageKind", "Scenario",
    "SignalingLedger", "SqnState", "SrfSimError", "Topology", "build_hierarchy",
    "hop_distance", "kdf", "load_scenario", "parse_scenario", "replay_check", "run",
    "savings_percent", "step", "total_cost",
]
