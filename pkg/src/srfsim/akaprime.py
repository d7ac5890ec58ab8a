"""Abstract EAP-AKA' message flows for core-driven and SRF edge-terminated auth.

Payloads are symbolic. Only what the flows need to decide outcomes is
carried: sequence numbers on challenge messages and a MAC tag on the
challenge response.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
from dataclasses import dataclass, field

from .errors import CrossSrf, ResyncLoop, UnreachableServer
from .netmodel import Topology

SQN_BITS = 48
SQN_WINDOW = 5


class MessageKind(enum.Enum):
    IdentityRequest = "IdentityRequest"
    IdentityResponse = "IdentityResponse"
    AuthVectorRequest = "AuthVectorRequest"
    AkaChallenge = "AkaChallenge"
    ChallengeDeliver = "ChallengeDeliver"
    ChallengeResponse = "ChallengeResponse"
    ResponseForward = "ResponseForward"
    SuccessIssue = "SuccessIssue"
    EapSuccess = "EapSuccess"
    SyncFailure = "SyncFailure"
    ResyncRequest = "ResyncRequest"
    RekeyRequest = "RekeyRequest"
    RekeyConfirm = "RekeyConfirm"
    SrfValidateRequest = "SrfValidateRequest"
    SrfValidateConfirm = "SrfValidateConfirm"


K = MessageKind


@dataclass(frozen=True)
class Message:
    seq: int
    sender: str
    receiver: str
    kind: MessageKind
    sqn: int | None = None
    tag: bytes | None = field(default=None, repr=False)


@dataclass(frozen=True)
class Outcome:
    success: bool
    reason: str | None = None

    def __str__(self) -> str:
        return "Success" if self.success else f"Failure({self.reason})"


SUCCESS = Outcome(True)


def Failure(reason: str) -> Outcome:
    return Outcome(False, reason)


@dataclass
class AuthTranscript:
    session_id: int
    messages: list[Message] = field(default_factory=list)
    outcome: Outcome | None = None
    flow: str = ""

    def send(self, sender: str, receiver: str, kind: MessageKind, **payload) -> Message:
        msg = Message(len(self.messages) + 1, sender, receiver, kind, **payload)
        self.messages.append(msg)
        return msg

    def __len__(self) -> int:
        return len(self.messages)

    def kinds(self) -> list[MessageKind]:
        return [m.kind for m in self.messages]

    def endpoints(self) -> list[tuple[str, str]]:
        return [(m.sender, m.receiver) for m in self.messages]


@dataclass
class SqnState:
    last_accepted: int = 0
    window: int = SQN_WINDOW

    @property
    def expected(self) -> int:
        return self.last_accepted + 1


def in_window(state: SqnState, presented: int) -> bool:
    return state.last_accepted < presented <= state.last_accepted + state.window


def replay_check(state: SqnState, presented: int) -> bool:
    """Accept ``presented`` iff it is fresh and inside the window.

    Accepting advances ``state``; rejecting leaves it untouched.
    """
    if not in_window(state, presented) or presented >= 2**SQN_BITS:
        return False
    state.last_accepted = presented
    return True


def mac_tag(secret: bytes, session_id: int, sqn: int) -> bytes:
    return hmac.new(secret, b"res" + session_id.to_bytes(8, "big") + sqn.to_bytes(6, "big"),
                    hashlib.sha256).digest()


@dataclass
class Subscriber:
    """Per-vehicle AKA state: the home network's and the peer's SQN views."""

    secret: bytes
    home: SqnState = field(default_factory=SqnState)
    peer: SqnState = field(default_factory=SqnState)
    # last genuine ChallengeResponse seen on the air, kept for replay injection
    captured: Message | None = None
    accepted: list[int] = field(default_factory=list)


@dataclass
class Faults:
    desync: int = 0
    replay: bool = False

    def __bool__(self) -> bool:
        return bool(self.desync or self.replay)


def _require_path(topology: Topology, a: str, b: str) -> None:
    if a not in topology or b not in topology or not topology.reachable(a, b):
        raise UnreachableServer(f"{b} unreachable from {a}")


def _exchange(tr: AuthTranscript, vehicle: str, gnb: str, challenge_peer: str,
              success_peer: str, server: str, sub: Subscriber, faults: Faults) -> AuthTranscript:
    """Run the nine-step EAP-AKA' ladder (plus resync / replay detours).

    ``challenge_peer`` is the far end of steps 3, 4 and 7 and ``success_peer``
    the sender of step 8; the resync pair always reaches ``server`` because
    the SQN lives with the home network.
    """
    tr.send(gnb, vehicle, K.IdentityRequest)
    tr.send(vehicle, gnb, K.IdentityResponse)
    tr.send(gnb, challenge_peer, K.AuthVectorRequest)

    pending_desync = faults.desync
    if pending_desync:
        # home SQN pushed past the peer's window
        sqn = sub.peer.last_accepted + sub.peer.window + 1
        pending_desync -= 1
    else:
        sqn = sub.home.expected
    tr.send(challenge_peer, gnb, K.AkaChallenge, sqn=sqn)
    tr.send(gnb, vehicle, K.ChallengeDeliver, sqn=sqn)

    if faults.replay:
        # adversary suppresses the challenge and plays back an old response
        old = sub.captured
        stale = old.sqn if old is not None else 0
        forged = tr.send(vehicle, gnb, K.ChallengeResponse, sqn=stale,
                         tag=old.tag if old is not None else bytes(32))
        tr.send(gnb, challenge_peer, K.ResponseForward, sqn=forged.sqn, tag=forged.tag)
        tr.outcome = _server_verdict(sub, tr.session_id, forged)
        return tr

    resyncs = 0
    while not in_window(sub.peer, sqn):
        resyncs += 1
        if resyncs > 1:
            raise ResyncLoop(f"second resynchronization in session {tr.session_id}")
        tr.send(vehicle, server, K.SyncFailure, sqn=sub.peer.last_accepted)
        sub.home.last_accepted = sub.peer.last_accepted
        if pending_desync:
            sqn = sub.peer.last_accepted + sub.peer.window + 1
            pending_desync -= 1
        else:
            sqn = sub.home.expected
        tr.send(server, vehicle, K.ResyncRequest, sqn=sqn)

    replay_check(sub.peer, sqn)
    resp = tr.send(vehicle, gnb, K.ChallengeResponse, sqn=sqn,
                   tag=mac_tag(sub.secret, tr.session_id, sqn))
    sub.captured = resp
    tr.send(gnb, challenge_peer, K.ResponseForward, sqn=sqn, tag=resp.tag)
    verdict = _server_verdict(sub, tr.session_id, resp)
    if not verdict.success:
        tr.outcome = verdict
        return tr
    tr.send(success_peer, gnb, K.SuccessIssue)
    tr.send(gnb, vehicle, K.EapSuccess)
    tr.outcome = SUCCESS
    return tr


def _server_verdict(sub: Subscriber, session_id: int, resp: Message) -> Outcome:
    probe = SqnState(sub.home.last_accepted, sub.home.window)
    if not replay_check(probe, resp.sqn):
        return Failure("replay")
    if not hmac.compare_digest(resp.tag, mac_tag(sub.secret, session_id, resp.sqn)):
        return Failure("mac")
    sub.home.last_accepted = probe.last_accepted
    sub.accepted.append(resp.sqn)
    return SUCCESS


def full_auth_run(vehicle: str, gnb: str, server: str, topology: Topology,
                  sub: Subscriber, session_id: int, faults: Faults | None = None) -> AuthTranscript:
    """Core-driven EAP-AKA': the serving gNB relays every round to ``server``."""
    _require_path(topology, gnb, server)
    tr = AuthTranscript(session_id, flow="full")
    return _exchange(tr, vehicle, gnb, server, server, server, sub, faults or Faults())


DEFAULT_EDGE_TERMINATED = frozenset({"identity", "success"})


def srf_full_auth_run(vehicle: str, gnb: str, srf: str, server: str, topology: Topology,
                      sub: Subscriber, session_id: int,
                      edge_terminated=DEFAULT_EDGE_TERMINATED,
                      faults: Faults | None = None) -> AuthTranscript:
    """EAP-AKA' with phases in ``edge_terminated`` answered by the SRF.

    Phases are identity (steps 1-2), challenge (3, 4, 7) and success (8).
    The identity phase never has a core endpoint in this ladder, so
    terminating it at the edge does not move any endpoint.
    """
    _require_path(topology, gnb, srf)
    _require_path(topology, srf, server)
    challenge_peer = srf if "challenge" in edge_terminated else server
    success_peer = srf if "success" in edge_terminated else server
    tr = AuthTranscript(session_id, flow="srf-full")
    return _exchange(tr, vehicle, gnb, challenge_peer, success_peer, server, sub,
                     faults or Faults())


def _rekey(tr: AuthTranscript, vehicle: str, gnb: str, srf: str) -> AuthTranscript:
    tr.send(vehicle, gnb, K.RekeyRequest)
    tr.send(gnb, srf, K.RekeyRequest)
    tr.send(srf, gnb, K.RekeyConfirm)
    tr.send(gnb, vehicle, K.RekeyConfirm)
    tr.outcome = SUCCESS
    return tr


def intra_rekey_run(vehicle: str, old_gnb: str, new_gnb: str, srf: str,
                    topology: Topology, session_id: int) -> AuthTranscript:
    """SRF-local rekey for a move between cells of the same SRF."""
    if topology.srf_of(old_gnb) != srf or topology.srf_of(new_gnb) != srf:
        raise CrossSrf(f"{old_gnb} -> {new_gnb} leaves {srf}")
    return _rekey(AuthTranscript(session_id, flow="intra"), vehicle, new_gnb, srf)


def inter_handover_run(vehicle: str, old_srf: str, new_srf: str, amf: str, new_gnb: str,
                       topology: Topology, sub: Subscriber, session_id: int,
                       handover_index: int, server: str, full_auth_every: int = 4,
                       edge_terminated=DEFAULT_EDGE_TERMINATED,
                       faults: Faults | None = None) -> AuthTranscript:
    """Cross-SRF move: AMF vouches for the vehicle to the new SRF, then rekey.

    ``handover_index`` is this vehicle's 1-based inter-handover count; every
    ``full_auth_every``-th one re-anchors with a full edge authentication.
    """
    if old_srf == new_srf:
        raise ValueError("inter handover needs two distinct SRFs")
    _require_path(topology, new_srf, amf)
    if handover_index % full_auth_every == 0:
        return srf_full_auth_run(vehicle, new_gnb, new_srf, server, topology, sub,
                                 session_id, edge_terminated, faults)
    tr = AuthTranscript(session_id, flow="inter")
    tr.send(new_srf, amf, K.SrfValidateRequest)
    tr.send(amf, new_srf, K.SrfValidateConfirm)
    return _rekey(tr, vehicle, new_gnb, new_srf)
