"""Key derivation and the baseline / SRF key hierarchies.

Every key is ``HMAC-SHA-256(parent_material, context_bytes)`` where the
context is a length-prefixed serialization of label, node id, session
counter, slice id and a 16-byte nonce.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import random
import struct
from dataclasses import dataclass, field

from .errors import IllegalParent, NotStatic, TopologyMismatch, UnknownVehicle
from .netmodel import NodeRole, Topology

KEY_BYTES = 32
NONCE_BYTES = 16
ZERO_NONCE = bytes(NONCE_BYTES)


class KeyLabel(enum.Enum):
    # value is the 1-byte label code used in the context serialization
    K_SEAF = 0x01
    K_AMF = 0x02
    K_SRF = 0x03
    K_SRF_SW = 0x04
    K_SRF_SW_P = 0x05
    K_SRF_SW_SV = 0x06
    K_SRF_SW_V = 0x07
    K_gNB = 0x08
    K_V = 0x09
    K_X = 0x0A

    @classmethod
    def parse(cls, name: str) -> KeyLabel:
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown key label {name!r}") from None


ROOT = None  # parent_label of the root key

L = KeyLabel
PERMITTED_PARENTS: dict[KeyLabel, frozenset] = {
    L.K_SEAF: frozenset({ROOT}),
    L.K_AMF: frozenset({L.K_SEAF}),
    L.K_SRF: frozenset({L.K_AMF, L.K_SEAF}),
    L.K_SRF_SW: frozenset({L.K_SRF}),
    L.K_SRF_SW_P: frozenset({L.K_SRF}),
    L.K_SRF_SW_SV: frozenset({L.K_SRF_SW}),
    L.K_SRF_SW_V: frozenset({L.K_SRF_SW}),
    # K_AMF parents are the baseline (no SRF) branch
    L.K_gNB: frozenset({L.K_AMF, L.K_SRF_SW, L.K_SRF_SW_P}),
    L.K_V: frozenset({L.K_AMF, L.K_SRF_SW, L.K_SRF_SW_P}),
    L.K_X: frozenset({L.K_SRF_SW_P}),
}
del L


def is_permitted(label: KeyLabel, parent: KeyLabel | None) -> bool:
    return parent in PERMITTED_PARENTS[label]


@dataclass(frozen=True)
class DerivationContext:
    label: KeyLabel
    node_id: str
    session_counter: int = 0
    slice_id: int = 0
    nonce: bytes = ZERO_NONCE

    def __post_init__(self):
        if len(self.node_id.encode("utf-8")) > 64:
            raise ValueError("node_id longer than 64 bytes")
        if not 0 <= self.session_counter < 2**64:
            raise ValueError("session_counter out of u64 range")
        if not 0 <= self.slice_id < 2**16:
            raise ValueError("slice_id out of u16 range")
        if len(self.nonce) != NONCE_BYTES:
            raise ValueError("nonce must be 16 bytes")

    def serialize(self) -> bytes:
        nid = self.node_id.encode("utf-8")
        return (bytes([self.label.value]) + struct.pack(">H", len(nid)) + nid
                + struct.pack(">QH", self.session_counter, self.slice_id) + self.nonce)


def kdf(parent_material: bytes, context: DerivationContext) -> bytes:
    return hmac.new(parent_material, context.serialize(), hashlib.sha256).digest()


KeyId = tuple  # (label, node_id, session_counter, slice_id, nonce)


@dataclass(frozen=True)
class Key:
    label: KeyLabel
    material: bytes = field(repr=False)
    context: DerivationContext
    parent_label: KeyLabel | None

    def __post_init__(self):
        if len(self.material) != KEY_BYTES:
            raise ValueError("key material must be 32 bytes")
        if not is_permitted(self.label, self.parent_label):
            raise IllegalParent(f"{self.label.name} under {_name(self.parent_label)}")

    @property
    def ident(self) -> KeyId:
        c = self.context
        return (c.label, c.node_id, c.session_counter, c.slice_id, c.nonce)

    @property
    def node_id(self) -> str:
        return self.context.node_id

    @property
    def counter(self) -> int:
        return self.context.session_counter

    def hex(self) -> str:
        return self.material.hex()


def _name(label: KeyLabel | None) -> str:
    return "root" if label is None else label.name


def root_key(root_seed: bytes, node_id: str = "seaf") -> Key:
    return Key(KeyLabel.K_SEAF, bytes(root_seed), DerivationContext(KeyLabel.K_SEAF, node_id), ROOT)


def derive_key(parent: Key, label: KeyLabel, node_id: str, session_counter: int = 0,
               slice_id: int = 0, nonce: bytes = ZERO_NONCE) -> Key:
    """Derive a child of ``parent`` without registering it anywhere."""
    if not is_permitted(label, parent.label):
        raise IllegalParent(f"{label.name} cannot be derived from {parent.label.name}")
    ctx = DerivationContext(label, node_id, session_counter, slice_id, nonce)
    return Key(label, kdf(parent.material, ctx), ctx, parent.label)


def derive_path(root: Key, labels, node_id: str, counter: int = 0) -> list[Key]:
    """Derive a chain of keys below ``root`` following ``labels`` in order."""
    keys, parent = [], root
    for label in labels:
        parent = derive_key(parent, label, node_id, counter)
        keys.append(parent)
    return keys


@dataclass
class KeyHierarchy:
    """Derivation tree rooted at K_SEAF.

    ``children`` maps a key's identity to the keys derived from it;
    ``current`` tracks the active key per (label, node id). Superseded keys
    stay in the tree, so ``history`` can audit freshness.
    """

    root: Key
    mode: str = "srf"
    rng: random.Random = field(default_factory=lambda: random.Random(0), repr=False)
    keys: dict[KeyId, Key] = field(default_factory=dict)
    parent_of: dict[KeyId, KeyId] = field(default_factory=dict)
    children: dict[KeyId, list[Key]] = field(default_factory=dict)
    current: dict[tuple[KeyLabel, str], Key] = field(default_factory=dict)
    # switch-or-collocated unit serving each gNB / promoted SV
    unit_of: dict[str, str] = field(default_factory=dict)
    history: dict[str, list[Key]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.keys:
            self._register(self.root, None)

    def _register(self, key: Key, parent: Key | None) -> None:
        if key.ident in self.keys:
            raise ValueError(f"key {key.label.name}/{key.node_id} registered twice")
        self.keys[key.ident] = key
        self.children.setdefault(key.ident, [])
        if parent is not None:
            self.parent_of[key.ident] = parent.ident
            self.children[parent.ident].append(key)
        self.current[(key.label, key.node_id)] = key
        if key.label is KeyLabel.K_V:
            self.history.setdefault(key.node_id, []).append(key)

    def derive_child(self, parent: Key, label: KeyLabel, node_id: str,
                     session_counter: int = 0, slice_id: int = 0,
                     nonce: bytes = ZERO_NONCE) -> Key:
        if parent.ident not in self.keys:
            raise KeyError(f"parent {parent.label.name}/{parent.node_id} is not in this hierarchy")
        key = derive_key(parent, label, node_id, session_counter, slice_id, nonce)
        self._register(key, parent)
        return key

    def get(self, label: KeyLabel, node_id: str) -> Key | None:
        return self.current.get((label, node_id))

    def require(self, label: KeyLabel, node_id: str) -> Key:
        key = self.get(label, node_id)
        if key is None:
            raise TopologyMismatch(f"no {label.name} for {node_id}")
        return key

    def parent(self, key: Key) -> Key | None:
        pid = self.parent_of.get(key.ident)
        return None if pid is None else self.keys[pid]

    def labels(self) -> list[KeyLabel]:
        return [k.label for k in self.keys.values()]

    def fresh_nonce(self) -> bytes:
        return self.rng.randbytes(NONCE_BYTES)

    def next_counter(self, label: KeyLabel, node_id: str) -> int:
        prev = self.get(label, node_id)
        return 0 if prev is None else prev.counter + 1

    def install_vehicle_key(self, vehicle: str, parent: Key, with_x: bool = False) -> Key:
        """Derive the next K_V for ``vehicle`` under ``parent`` (and K_X if asked)."""
        counter = self.next_counter(KeyLabel.K_V, vehicle)
        kv = self.derive_child(parent, KeyLabel.K_V, vehicle, counter, nonce=self.fresh_nonce())
        if with_x:
            self.derive_child(parent, KeyLabel.K_X, vehicle,
                              self.next_counter(KeyLabel.K_X, vehicle), nonce=self.fresh_nonce())
        return kv

    def verify(self) -> None:
        """Assert the tree and recomputability invariants; raises AssertionError."""
        for kid, key in self.keys.items():
            pid = self.parent_of.get(kid)
            if pid is None:
                assert key is self.root, f"{key.label.name}/{key.node_id} has no parent"
                continue
            parent = self.keys[pid]
            assert is_permitted(key.label, parent.label)
            assert kdf(parent.material, key.context) == key.material
        # walk parent pointers from every key; each must reach the root without repeats
        for kid in self.keys:
            seen = set()
            while kid in self.parent_of:
                assert kid not in seen, "derivation cycle"
                seen.add(kid)
                kid = self.parent_of[kid]
            assert kid == self.root.ident


def _switch_units(t: Topology) -> dict[str, list[str]]:
    """SRF id -> its switch units (adjacent SW nodes), or [srf] when collocated."""
    units = {}
    for srf in t.ids(NodeRole.SRF):
        sws = sorted(n for n in t.graph.neighbors(srf) if t.role(n) is NodeRole.SW)
        units[srf] = sws or [srf]
    return units


def unit_for(t: Topology, cell: str, units: dict[str, list[str]] | None = None) -> str:
    """The switch-or-collocated unit whose keys serve ``cell`` (a gNB or SV)."""
    srf = t.srf_of(cell)
    if srf is None:
        raise TopologyMismatch(f"{cell} has no SRF association")
    candidates = (units or _switch_units(t))[srf]
    if len(candidates) == 1:
        return candidates[0]
    dist = t.distances_from(cell)
    return min(candidates, key=lambda u: (dist.get(u, float("inf")), u))


def build_hierarchy(mode: str, topology: Topology, root_seed: bytes,
                    srf_parent: str = "AMF", rng_seed: int = 0) -> KeyHierarchy:
    """Build the static part of the key tree for ``topology``.

    Baseline: K_SEAF -> K_AMF -> K_gNB per gNB. SRF mode: K_SEAF -> K_AMF
    -> K_SRF per SRF -> K_SRF_SW / K_SRF_SW_P per unit -> K_gNB per gNB.
    Vehicle keys are added later by the simulator.
    """
    if mode not in ("baseline", "srf"):
        raise ValueError(f"unknown mode {mode!r}")
    if srf_parent not in ("AMF", "SEAF"):
        raise ValueError("srf_parent must be AMF or SEAF")
    seafs = topology.ids(NodeRole.SEAF)
    h = KeyHierarchy(root_key(root_seed, seafs[0] if seafs else "seaf"), mode,
                     random.Random(rng_seed))
    amfs = topology.ids(NodeRole.AMF)
    if not amfs:
        raise TopologyMismatch("topology has no AMF")
    for amf in amfs:
        h.derive_child(h.root, KeyLabel.K_AMF, amf)

    gnbs = topology.ids(NodeRole.GNB)
    if mode == "baseline":
        for g in gnbs:
            amf = topology.nearest(g, NodeRole.AMF)
            h.derive_child(h.require(KeyLabel.K_AMF, amf), KeyLabel.K_gNB, g)
        return h

    orphans = [g for g in gnbs if topology.srf_of(g) is None]
    if orphans:
        raise TopologyMismatch(f"gNB without SRF association: {', '.join(orphans)}")
    units = _switch_units(topology)
    for srf in topology.ids(NodeRole.SRF):
        if srf_parent == "AMF":
            parent = h.require(KeyLabel.K_AMF, topology.nearest(srf, NodeRole.AMF))
        else:
            parent = h.root
        k_srf = h.derive_child(parent, KeyLabel.K_SRF, srf)
        for unit in units[srf]:
            h.derive_child(k_srf, KeyLabel.K_SRF_SW, unit)
            h.derive_child(k_srf, KeyLabel.K_SRF_SW_P, unit)
    for g in gnbs:
        unit = unit_for(topology, g, units)
        h.unit_of[g] = unit
        h.derive_child(h.require(KeyLabel.K_SRF_SW, unit), KeyLabel.K_gNB, g)
    return h


def promote_static_vehicle(h: KeyHierarchy, topology: Topology, srf: str, sv: str,
                           parked: bool = True) -> Key:
    """Turn a parked static vehicle into gNB' under ``srf``.

    SRF mode yields a fresh K_SRF_SW_SV; baseline mode (no SRF branch) gives
    the vehicle a K_gNB under its nearest AMF so it can still serve attaches.
    """
    if topology.role(sv) is not NodeRole.SV or not parked:
        raise NotStatic(f"{sv} is not a parked static vehicle")
    if h.mode == "baseline":
        amf = h.require(KeyLabel.K_AMF, topology.nearest(sv, NodeRole.AMF))
        return h.derive_child(amf, KeyLabel.K_gNB, sv, h.next_counter(KeyLabel.K_gNB, sv))
    if topology.srf_of(sv) != srf:
        raise TopologyMismatch(f"{sv} is not associated with {srf}")
    unit = unit_for(topology, sv)
    sw = h.require(KeyLabel.K_SRF_SW, unit)
    h.unit_of[sv] = unit
    return h.derive_child(sw, KeyLabel.K_SRF_SW_SV, sv,
                          h.next_counter(KeyLabel.K_SRF_SW_SV, sv), nonce=h.fresh_nonce())


def rotate_session_keys(h: KeyHierarchy, vehicle: str) -> Key:
    """Replace the vehicle's K_V with the next-counter key under the same parent."""
    old = h.get(KeyLabel.K_V, vehicle)
    if old is None:
        raise UnknownVehicle(vehicle)
    return h.install_vehicle_key(vehicle, h.parent(old))
