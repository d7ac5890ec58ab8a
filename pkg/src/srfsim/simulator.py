"""Deterministic event loop replaying a trace in baseline or SRF mode."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from . import akaprime as aka
from .akaprime import AuthTranscript, Faults, Subscriber
from .errors import (OutOfOrderEvent, SrfSimError, TopologyMismatch, UnreachableServer,
                     ValidationError)
from .keychain import KeyHierarchy, KeyLabel, build_hierarchy, promote_static_vehicle
from .metrics import SignalingLedger, record_transcript
from .netmodel import Action, NodeRole, SimConfig, SimEvent, Topology, Trace

MODES = ("baseline", "srf")


def root_seed_for(seed: int) -> bytes:
    return hashlib.sha256(b"srfsim/root/" + seed.to_bytes(8, "big")).digest()


def subscriber_secret(seed: int, vehicle: str) -> bytes:
    return hashlib.sha256(b"srfsim/sub/" + seed.to_bytes(8, "big") + vehicle.encode()).digest()


@dataclass
class SimState:
    topology: Topology
    mode: str
    seed: int
    config: SimConfig
    keys: KeyHierarchy
    time: int = 0
    serving_gnb: dict[str, str] = field(default_factory=dict)
    serving_srf: dict[str, str] = field(default_factory=dict)
    authenticated: set[str] = field(default_factory=set)
    subscribers: dict[str, Subscriber] = field(default_factory=dict)
    armed: dict[str, Faults] = field(default_factory=dict)
    inter_count: dict[str, int] = field(default_factory=dict)
    parked: set[str] = field(default_factory=set)
    promoted: set[str] = field(default_factory=set)
    ledger: SignalingLedger = field(default_factory=SignalingLedger)
    transcripts: list[AuthTranscript] = field(default_factory=list)
    view: Topology | None = None

    @property
    def sessions(self) -> int:
        return len(self.transcripts)


def initial_state(topology: Topology, mode: str, seed: int = 0,
                  config: SimConfig | None = None) -> SimState:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    config = config or SimConfig()
    keys = build_hierarchy(mode, topology, root_seed_for(seed), config.srf_parent, rng_seed=seed)
    return SimState(topology, mode, seed, config, keys, view=topology)


def _server(t: Topology, near: str) -> str:
    server = t.nearest(near, NodeRole.AUSF) or t.nearest(near, NodeRole.AMF)
    if server is None:
        raise UnreachableServer(f"no AUSF/AMF reachable from {near}")
    return server


def _subscriber(state: SimState, vehicle: str) -> Subscriber:
    sub = state.subscribers.get(vehicle)
    if sub is None:
        sub = state.subscribers[vehicle] = Subscriber(subscriber_secret(state.seed, vehicle))
    return sub


def _finish(state: SimState, tr: AuthTranscript) -> AuthTranscript:
    state.transcripts.append(tr)
    record_transcript(state.ledger, tr, state.view, state.time)
    return tr


def _full_auth(state: SimState, vehicle: str, cell: str, inter_index: int | None = None,
               old_srf: str | None = None) -> AuthTranscript:
    """EAP-AKA' in the current mode; installs a fresh K_V on success."""
    t, sub, k = state.topology, _subscriber(state, vehicle), state.keys
    faults = state.armed.pop(vehicle, Faults())
    sid = state.sessions + 1
    if state.mode == "baseline":
        tr = aka.full_auth_run(vehicle, cell, _server(t, cell), state.view, sub, sid, faults)
        if tr.outcome.success:
            amf = k.require(KeyLabel.K_AMF, t.nearest(cell, NodeRole.AMF))
            k.install_vehicle_key(vehicle, amf)
        return tr
    srf = t.srf_of(cell)
    server = _server(t, srf)
    if inter_index is not None:
        tr = aka.inter_handover_run(vehicle, old_srf, srf, t.nearest(srf, NodeRole.AMF), cell,
                                    state.view, sub, sid, inter_index, server,
                                    state.config.full_auth_every,
                                    state.config.edge_terminated, faults)
    else:
        tr = aka.srf_full_auth_run(vehicle, cell, srf, server, state.view, sub, sid,
                                   state.config.edge_terminated, faults)
    if tr.outcome.success:
        unit = state.keys.unit_of[cell]
        if tr.flow == "inter":
            k.install_vehicle_key(vehicle, k.require(KeyLabel.K_SRF_SW, unit))
        else:
            k.install_vehicle_key(vehicle, k.require(KeyLabel.K_SRF_SW_P, unit), with_x=True)
        if t.role(cell) is NodeRole.SV:
            sw = k.require(KeyLabel.K_SRF_SW, unit)
            k.derive_child(sw, KeyLabel.K_SRF_SW_V, vehicle,
                           k.next_counter(KeyLabel.K_SRF_SW_V, vehicle), nonce=k.fresh_nonce())
    return tr


def _attach_view(state: SimState, vehicle: str, cell: str) -> None:
    state.serving_gnb[vehicle] = cell
    state.view = state.topology.with_attachments(state.serving_gnb)


def _check_cell(state: SimState, cell: str) -> None:
    if state.topology.role(cell) is NodeRole.SV and cell not in state.promoted:
        raise ValidationError(f"{cell} has not been promoted to gNB'")


def _on_attach(state: SimState, ev: SimEvent) -> None:
    vehicle, cell = ev.subject, ev.target
    _check_cell(state, cell)
    state.parked.discard(vehicle)
    _attach_view(state, vehicle, cell)
    tr = _finish(state, _full_auth(state, vehicle, cell))
    _settle(state, vehicle, cell, tr)


def _settle(state: SimState, vehicle: str, cell: str, tr: AuthTranscript) -> None:
    if state.mode == "srf":
        state.serving_srf[vehicle] = state.topology.srf_of(cell)
    if tr.outcome.success:
        state.authenticated.add(vehicle)
    else:
        state.authenticated.discard(vehicle)


def _on_move(state: SimState, ev: SimEvent) -> None:
    vehicle, cell = ev.subject, ev.target
    if vehicle not in state.serving_gnb:
        raise ValidationError(f"{vehicle} moves before attach")
    _check_cell(state, cell)
    old_cell = state.serving_gnb[vehicle]
    state.parked.discard(vehicle)
    _attach_view(state, vehicle, cell)
    if state.mode == "baseline" or vehicle not in state.authenticated:
        tr = _full_auth(state, vehicle, cell)
    else:
        old_srf = state.serving_srf[vehicle]
        new_srf = state.topology.srf_of(cell)
        if new_srf == old_srf:
            tr = aka.intra_rekey_run(vehicle, old_cell, cell, new_srf, state.view,
                                     state.sessions + 1)
            unit = state.keys.unit_of[cell]
            state.keys.install_vehicle_key(vehicle,
                                           state.keys.require(KeyLabel.K_SRF_SW, unit))
        else:
            n = state.inter_count[vehicle] = state.inter_count.get(vehicle, 0) + 1
            tr = _full_auth(state, vehicle, cell, inter_index=n, old_srf=old_srf)
    _finish(state, tr)
    _settle(state, vehicle, cell, tr)


def _on_promote(state: SimState, ev: SimEvent) -> None:
    sv, t = ev.subject, state.topology
    srf = t.srf_of(sv) if t.role(sv) is NodeRole.SV else None
    if state.mode == "srf" and t.role(sv) is NodeRole.SV and srf is None:
        raise TopologyMismatch(f"{sv} has no SRF association")
    promote_static_vehicle(state.keys, t, srf, sv, parked=sv in state.parked)
    state.promoted.add(sv)


def _on_inject(state: SimState, ev: SimEvent) -> None:
    faults = state.armed.setdefault(ev.subject, Faults())
    if ev.action is Action.INJECT_DESYNC:
        faults.desync += 1
    else:
        faults.replay = True


_HANDLERS = {
    Action.ATTACH: _on_attach,
    Action.MOVE: _on_move,
    Action.PARK: lambda s, ev: s.parked.add(ev.subject),
    Action.PROMOTE: _on_promote,
    Action.INJECT_REPLAY: _on_inject,
    Action.INJECT_DESYNC: _on_inject,
}


def step(state: SimState, event: SimEvent) -> SimState:
    """Apply one event to ``state`` in place and return it."""
    if event.time < state.time:
        raise OutOfOrderEvent(f"event at t={event.time} after t={state.time}")
    state.time = event.time
    try:
        _HANDLERS[event.action](state, event)
    except SrfSimError as exc:
        if exc.event_time is None:
            exc.event_time = event.time
        raise
    return state


def run(topology: Topology, trace: Trace, mode: str, seed: int = 0,
        config: SimConfig | None = None):
    """Replay ``trace``; returns ``(ledger, final_state, transcripts)``."""
    state = initial_state(topology, mode, seed, config)
    for ev in trace:
        step(state, ev)
    return state.ledger, state, state.transcripts
