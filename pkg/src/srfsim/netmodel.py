"""Node roles, hop-weighted topology and the ``.scn`` scenario format."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import networkx as nx

from .errors import ParseError, UnknownNode, ValidationError


class NodeRole(enum.Enum):
    AMF = "AMF"
    SEAF = "SEAF"
    AUSF = "AUSF"
    UDM = "UDM"
    SMF = "SMF"
    UPF = "UPF"
    SW = "SW"
    SRF = "SRF"
    GNB = "GNB"
    SV = "SV"
    VEH = "VEH"

    @property
    def is_core(self) -> bool:
        return self in CORE_ROLES

    @property
    def is_edge(self) -> bool:
        return self in EDGE_ROLES


CORE_ROLES = frozenset({NodeRole.AMF, NodeRole.SEAF, NodeRole.AUSF,
                        NodeRole.UDM, NodeRole.SMF, NodeRole.UPF})
EDGE_ROLES = frozenset({NodeRole.SW, NodeRole.SRF, NodeRole.GNB, NodeRole.SV})

# one air-interface hop between a vehicle and the cell serving it
RADIO_HOPS = 1

ID_RE = re.compile(r"[a-z0-9_-]{1,64}")


@dataclass(frozen=True)
class Node:
    id: str
    role: NodeRole
    srf: str | None = None


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    hops: int

    def key(self) -> frozenset[str]:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class Topology:
    """Weighted undirected graph of typed nodes.

    Node and link order is the file order and is kept for serialization;
    equality compares the tuples, so two topologies parsed from equivalent
    files compare equal.
    """

    nodes: tuple[Node, ...]
    links: tuple[Link, ...]

    @cached_property
    def by_id(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(n.id for n in self.nodes)
        g.add_weighted_edges_from((l.a, l.b, l.hops) for l in self.links)
        return g

    @cached_property
    def _dist_cache(self) -> dict[str, dict[str, int]]:
        return {}

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.by_id

    def node(self, node_id: str) -> Node:
        try:
            return self.by_id[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def role(self, node_id: str) -> NodeRole:
        return self.node(node_id).role

    def ids(self, role: NodeRole) -> list[str]:
        return [n.id for n in self.nodes if n.role is role]

    def srf_of(self, node_id: str) -> str | None:
        return self.node(node_id).srf

    def distances_from(self, a: str) -> dict[str, int]:
        self.node(a)
        dist = self._dist_cache.get(a)
        if dist is None:
            dist = nx.single_source_dijkstra_path_length(self.graph, a)
            self._dist_cache[a] = dist
        return dist

    def reachable(self, a: str, b: str) -> bool:
        self.node(b)
        return b in self.distances_from(a)

    def nearest(self, a: str, role: NodeRole) -> str | None:
        """Closest node of ``role`` to ``a``; ties go to the smaller id."""
        dist = self.distances_from(a)
        found = [(dist[n], n) for n in self.ids(role) if n in dist]
        return min(found)[1] if found else None

    def with_attachments(self, serving: Mapping[str, str]) -> Topology:
        """Return the view where each vehicle in ``serving`` hangs off its cell.

        A vehicle's static links are replaced by a single radio link to the
        serving gNB (or promoted static vehicle).
        """
        if not serving:
            return self
        moved = set(serving)
        links = [l for l in self.links if l.a not in moved and l.b not in moved]
        links += [Link(v, g, RADIO_HOPS) for v, g in sorted(serving.items())]
        return Topology(self.nodes, tuple(links))


def hop_distance(t: Topology, a: str, b: str) -> int:
    """Minimum summed link weight between ``a`` and ``b``.

    Raises ``UnknownNode`` for ids not in ``t`` and ``ValidationError`` when
    no path exists.
    """
    t.node(b)
    if a == b:
        t.node(a)
        return 0
    try:
        return t.distances_from(a)[b]
    except KeyError:
        raise ValidationError(f"no path between {a} and {b}") from None


# ---------------------------------------------------------------- trace

class Action(enum.Enum):
    ATTACH = "attach"
    MOVE = "move"
    PARK = "park"
    PROMOTE = "promote"
    INJECT_REPLAY = "inject replay"
    INJECT_DESYNC = "inject desync"


@dataclass(frozen=True)
class SimEvent:
    time: int
    action: Action
    subject: str
    target: str | None = None

    def to_line(self) -> str:
        parts = [str(self.time), self.action.value, self.subject]
        if self.target is not None:
            parts.append(self.target)
        return " ".join(parts)


@dataclass(frozen=True)
class Trace:
    events: tuple[SimEvent, ...] = ()

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


# ---------------------------------------------------------------- config

EDGE_PHASES = ("identity", "challenge", "success")


@dataclass(frozen=True)
class SimConfig:
    edge_terminated: frozenset[str] = frozenset({"identity", "success"})
    full_auth_every: int = 4
    srf_parent: str = "AMF"
    # keys present in the source file, in file order, for round-tripping
    explicit: tuple[str, ...] = field(default=(), compare=False)

    def to_lines(self) -> list[str]:
        out = []
        for key in self.explicit:
            if key == "edge_terminated":
                value = ",".join(p for p in EDGE_PHASES if p in self.edge_terminated)
            elif key == "full_auth_every":
                value = str(self.full_auth_every)
            else:
                value = self.srf_parent
            out.append(f"{key}={value}")
        return out


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    trace: Trace
    config: SimConfig


# ---------------------------------------------------------------- parsing

SECTIONS = ("nodes", "links", "config", "trace")
REQUIRED_SECTIONS = ("nodes", "links", "trace")


def _check_id(token: str, lineno: int) -> str:
    if not ID_RE.fullmatch(token):
        raise ParseError(lineno, f"bad id {token!r}")
    return token


def _parse_uint(token: str, lineno: int, what: str) -> int:
    if not token.isdigit() or not token.isascii():
        raise ParseError(lineno, f"{what} must be a decimal integer, got {token!r}")
    return int(token)


def _parse_node(tokens: list[str], lineno: int) -> Node:
    if len(tokens) not in (2, 3):
        raise ParseError(lineno, "expected '<id> <ROLE> [srf=<id>]'")
    nid = _check_id(tokens[0], lineno)
    try:
        role = NodeRole(tokens[1])
    except ValueError:
        raise ParseError(lineno, f"unknown role {tokens[1]!r}") from None
    srf = None
    if len(tokens) == 3:
        if not tokens[2].startswith("srf="):
            raise ParseError(lineno, f"unexpected token {tokens[2]!r}")
        if role not in (NodeRole.GNB, NodeRole.SV):
            raise ParseError(lineno, "srf= is only allowed on GNB/SV lines")
        srf = _check_id(tokens[2][4:], lineno)
    return Node(nid, role, srf)


def _parse_link(tokens: list[str], lineno: int) -> Link:
    if len(tokens) != 3:
        raise ParseError(lineno, "expected '<idA> <idB> <hops>'")
    a, b = _check_id(tokens[0], lineno), _check_id(tokens[1], lineno)
    hops = _parse_uint(tokens[2], lineno, "hops")
    if hops < 1:
        raise ParseError(lineno, "hops must be >= 1")
    if a == b:
        raise ParseError(lineno, "self-loop")
    return Link(a, b, hops)


def _parse_config(tokens: list[str], lineno: int, cfg: dict) -> None:
    if len(tokens) != 1 or "=" not in tokens[0]:
        raise ParseError(lineno, "expected '<key>=<value>'")
    key, value = tokens[0].split("=", 1)
    if key in cfg["explicit"]:
        raise ParseError(lineno, f"duplicate config key {key!r}")
    if key == "edge_terminated":
        phases = [p for p in value.split(",") if p] if value else []
        for p in phases:
            if p not in EDGE_PHASES:
                raise ParseError(lineno, f"unknown phase {p!r}")
        cfg["edge_terminated"] = frozenset(phases)
    elif key == "full_auth_every":
        k = _parse_uint(value, lineno, "full_auth_every")
        if k < 1:
            raise ParseError(lineno, "full_auth_every must be >= 1")
        cfg["full_auth_every"] = k
    elif key == "srf_parent":
        if value not in ("AMF", "SEAF"):
            raise ParseError(lineno, f"srf_parent must be AMF or SEAF, got {value!r}")
        cfg["srf_parent"] = value
    else:
        raise ParseError(lineno, f"unknown config key {key!r}")
    cfg["explicit"].append(key)


_ARITY = {
    "attach": 4, "move": 4, "park": 3, "promote": 3,
}


def _parse_event(tokens: list[str], lineno: int) -> SimEvent:
    if len(tokens) < 3:
        raise ParseError(lineno, "truncated trace line")
    t = _parse_uint(tokens[0], lineno, "time")
    verb = tokens[1]
    if verb == "inject":
        if len(tokens) != 4 or tokens[2] not in ("replay", "desync"):
            raise ParseError(lineno, "expected '<t> inject replay|desync <veh>'")
        action = Action.INJECT_REPLAY if tokens[2] == "replay" else Action.INJECT_DESYNC
        return SimEvent(t, action, _check_id(tokens[3], lineno))
    if verb not in _ARITY:
        raise ParseError(lineno, f"unknown trace action {verb!r}")
    if len(tokens) != _ARITY[verb]:
        raise ParseError(lineno, f"wrong number of tokens for {verb}")
    subject = _check_id(tokens[2], lineno)
    target = _check_id(tokens[3], lineno) if len(tokens) == 4 else None
    return SimEvent(t, Action(verb), subject, target)


def parse_scenario(data: bytes | str) -> Scenario:
    """Parse and validate a ``.scn`` scenario.

    Grammar problems raise ``ParseError`` with the 1-based line number;
    semantic problems raise ``ValidationError``.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(1, f"input is not UTF-8: {exc}") from None
    else:
        text = data

    nodes: list[Node] = []
    links: list[Link] = []
    events: list[SimEvent] = []
    cfg: dict = {"explicit": []}
    seen: list[str] = []
    section = None

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip(" ")
        if "\t" in line or "\r" in line:
            raise ParseError(lineno, "tabs and CR are not allowed")
        if not line:
            continue
        if line.startswith("["):
            name = line[1:-1] if line.endswith("]") else None
            if name not in SECTIONS:
                raise ParseError(lineno, f"unknown section {line!r}")
            if name in seen:
                raise ParseError(lineno, f"duplicate section [{name}]")
            if seen and SECTIONS.index(name) < SECTIONS.index(seen[-1]):
                raise ParseError(lineno, f"section [{name}] out of order")
            seen.append(name)
            section = name
            continue
        if section is None:
            raise ParseError(lineno, "content before first section")
        tokens = line.split()
        if section == "nodes":
            nodes.append(_parse_node(tokens, lineno))
        elif section == "links":
            links.append(_parse_link(tokens, lineno))
        elif section == "config":
            _parse_config(tokens, lineno, cfg)
        else:
            events.append(_parse_event(tokens, lineno))

    for name in REQUIRED_SECTIONS:
        if name not in seen:
            raise ParseError(lineno, f"missing [{name}] section")

    explicit = tuple(cfg.pop("explicit"))
    topology = Topology(tuple(nodes), tuple(links))
    trace = Trace(tuple(events))
    validate_topology(topology)
    validate_trace(topology, trace)
    return Scenario(topology, trace, SimConfig(**cfg, explicit=explicit))


def validate_topology(t: Topology) -> None:
    ids = [n.id for n in t.nodes]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ValidationError(f"duplicate node id {dup!r}")
    by_id = t.by_id
    for n in t.nodes:
        if n.srf is not None:
            if n.srf not in by_id or by_id[n.srf].role is not NodeRole.SRF:
                raise ValidationError(f"{n.id}: srf={n.srf} is not an SRF node")
    seen: set[frozenset[str]] = set()
    for l in t.links:
        for end in (l.a, l.b):
            if end not in by_id:
                raise ValidationError(f"link references unknown node {end!r}")
        if l.key() in seen:
            raise ValidationError(f"duplicate link {l.a}-{l.b}")
        seen.add(l.key())
    fixed = [n.id for n in t.nodes if n.role is not NodeRole.VEH]
    if fixed:
        sub = t.graph.subgraph(fixed)
        if not nx.is_connected(sub):
            raise ValidationError("disconnected: non-vehicle nodes do not form one component")


def validate_trace(t: Topology, trace: Trace) -> None:
    last = 0
    attached: set[str] = set()
    parked: set[str] = set()
    promoted: set[str] = set()

    def need(node_id: str, *roles: NodeRole) -> None:
        if node_id not in t:
            raise ValidationError(f"trace references unknown node {node_id!r}")
        if t.role(node_id) not in roles:
            allowed = "/".join(r.value for r in roles)
            raise ValidationError(f"{node_id} must be {allowed}")

    for ev in trace:
        if ev.time < last:
            raise ValidationError(f"timestamps decrease at t={ev.time}")
        last = ev.time
        if ev.action in (Action.ATTACH, Action.MOVE):
            need(ev.subject, NodeRole.VEH)
            need(ev.target, NodeRole.GNB, NodeRole.SV)
            if t.role(ev.target) is NodeRole.SV and ev.target not in promoted:
                raise ValidationError(f"{ev.target} serves before being promoted")
            if ev.action is Action.ATTACH:
                if ev.subject in attached:
                    raise ValidationError(f"{ev.subject} attaches twice")
                attached.add(ev.subject)
            elif ev.subject not in attached:
                raise ValidationError(f"{ev.subject} moves before attach")
            parked.discard(ev.subject)
        elif ev.action is Action.PARK:
            need(ev.subject, NodeRole.VEH, NodeRole.SV)
            parked.add(ev.subject)
        elif ev.action is Action.PROMOTE:
            need(ev.subject, NodeRole.VEH, NodeRole.SV)
            if ev.subject not in parked:
                raise ValidationError(f"{ev.subject} promoted without parking")
            promoted.add(ev.subject)
        else:
            need(ev.subject, NodeRole.VEH)


def serialize_scenario(s: Scenario) -> str:
    out = ["[nodes]"]
    for n in s.topology.nodes:
        out.append(f"{n.id} {n.role.value}" + (f" srf={n.srf}" if n.srf else ""))
    out.append("[links]")
    out += [f"{l.a} {l.b} {l.hops}" for l in s.topology.links]
    if s.config.explicit:
        out.append("[config]")
        out += s.config.to_lines()
    out.append("[trace]")
    out += [ev.to_line() for ev in s.trace]
    return "\n".join(out) + "\n"


def load_scenario(path) -> Scenario:
    with open(path, "rb") as fh:
        return parse_scenario(fh.read())


def make_topology(nodes: Iterable[tuple], links: Iterable[tuple]) -> Topology:
    """Build and validate a topology from plain tuples (tests, scripts)."""
    t = Topology(
        tuple(Node(n[0], NodeRole(n[1]) if isinstance(n[1], str) else n[1],
                   n[2] if len(n) > 2 else None) for n in nodes),
        tuple(Link(*l) for l in links),
    )
    validate_topology(t)
    return t
