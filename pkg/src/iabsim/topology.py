"""Network object model: nodes, links, carriers, flows, scenario graph.

A :class:`Scenario` is a flat graph plus workload and schedule. Construction
helpers (`add_node`, `add_link`) enforce the hard structural rules eagerly;
`validate_topology` re-checks everything and reports violations as data, so
scenarios loaded from files can be diagnosed instead of rejected mid-parse.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from . import radio
from .errors import (DirectiveOutOfRange, DuplicateCu, DuplicateUpf,
                     IllegalMedium, MissingCarrier, UnknownNode)
from .radio import RadioParams, VALID_SCS_HZ


class Role(str, Enum):
    CU = "CU"
    DONOR_DU = "DonorDU"
    IAB_MT = "IabMt"
    IAB_DU = "IabDu"
    UE = "Ue"
    UPF = "Upf"


class Medium(str, Enum):
    WIRED = "Wired"
    RADIO = "Radio"


DU_ROLES = frozenset({Role.DONOR_DU, Role.IAB_DU})
RADIO_ROLES = frozenset({Role.DONOR_DU, Role.IAB_DU, Role.UE, Role.IAB_MT})
# Allowed wired endpoint role pairs (unordered). IabMt-IabDu is further
# restricted to the same owner_group in validation.
WIRED_PAIRS = frozenset({
    frozenset({Role.CU, Role.DONOR_DU}),
    frozenset({Role.CU, Role.UPF}),
    frozenset({Role.IAB_MT, Role.IAB_DU}),
})

INTERNAL_LINK_CAPACITY_BPS = 1e15  # IabMt-IabDu share one box on the UAV


@dataclass(frozen=True)
class Carrier:
    band_label: str
    center_frequency_hz: float
    bandwidth_hz: float
    scs_hz: float

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        if self.scs_hz not in VALID_SCS_HZ:
            raise ValueError(f"scs must be one of {VALID_SCS_HZ}")
        if self.center_frequency_hz <= self.bandwidth_hz / 2:
            raise ValueError("center frequency must exceed half the bandwidth")


@dataclass
class Node:
    id: str
    role: Role
    position: tuple[float, float]
    tx_power_dbm: Optional[float] = None
    owner_group: Optional[str] = None
    # Advertised carrier of a DU; consulted for coverage before any access
    # link to a UE exists, and replaced by du_config_update.
    carrier: Optional[Carrier] = None


@dataclass
class Link:
    id: str
    a: str
    b: str
    medium: Medium
    carrier: Optional[Carrier] = None
    wired_capacity_bps: Optional[float] = None
    propagation_delay_s: float = 0.0
    radio_overrides: dict = field(default_factory=dict)

    def other(self, node_id: str) -> str:
        return self.b if node_id == self.a else self.a

    def connects(self, a: str, b: str) -> bool:
        return {self.a, self.b} == {a, b}


@dataclass
class FlowSpec:
    id: str
    src: str
    dst: str
    rate_bps: float
    packet_size_bytes: int = 1400
    start_s: float = 0.0
    stop_s: float = 0.0


@dataclass
class IabNodeDirective:
    """Timed instantiation of an IAB node (IabMt + IabDu pair)."""
    at_s: float
    position: tuple[float, float]
    access_carrier: Carrier
    tx_power_dbm: float
    mt_tx_power_dbm: float = 23.0
    group: Optional[str] = None


@dataclass
class DuConfigUpdateDirective:
    """Timed carrier reconfiguration of a running DU."""
    at_s: float
    du: str
    carrier: Carrier


@dataclass
class FlowAssert:
    flow: str
    window: tuple[float, float]
    min_goodput_bps: Optional[float] = None
    max_goodput_bps: Optional[float] = None
    max_mean_latency_s: Optional[float] = None


@dataclass(frozen=True)
class ProtocolConstants:
    gtp_header_bytes: int = 8
    bap_header_bytes: int = 4
    control_message_bytes: int = 64
    ttl: int = 16
    link_buffer_packets: int = 256


@dataclass
class Scenario:
    duration_s: float
    seed: int = 0
    nodes: dict[str, Node] = field(default_factory=dict)
    links: list[Link] = field(default_factory=list)
    flows: list[FlowSpec] = field(default_factory=list)
    schedule: list = field(default_factory=list)
    radio_params: RadioParams = field(default_factory=RadioParams)
    protocol: ProtocolConstants = field(default_factory=ProtocolConstants)
    asserts: list[FlowAssert] = field(default_factory=list)
    _counter: int = 0

    # -- construction ------------------------------------------------------

    def _next_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter}"

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def add_node(self, role: Role, position: tuple[float, float],
                 tx_power_dbm: Optional[float] = None,
                 owner_group: Optional[str] = None,
                 carrier: Optional[Carrier] = None,
                 node_id: Optional[str] = None) -> str:
        role = Role(role)
        if not all(math.isfinite(c) for c in position):
            raise ValueError(f"non-finite position {position}")
        if role is Role.CU and any(n.role is Role.CU for n in self.nodes.values()):
            raise DuplicateCu("scenario already has a CU")
        if role is Role.UPF and any(n.role is Role.UPF for n in self.nodes.values()):
            raise DuplicateUpf("scenario already has a UPF")
        nid = node_id or self._next_id("n")
        if nid in self.nodes:
            raise ValueError(f"duplicate node id {nid!r}")
        self.nodes[nid] = Node(id=nid, role=role, position=tuple(position),
                               tx_power_dbm=tx_power_dbm,
                               owner_group=owner_group, carrier=carrier)
        return nid

    def add_link(self, a: str, b: str, medium: Medium,
                 carrier: Optional[Carrier] = None,
                 wired_capacity_bps: Optional[float] = None,
                 propagation_delay_s: Optional[float] = None,
                 link_id: Optional[str] = None) -> str:
        medium = Medium(medium)
        na, nb = self.node(a), self.node(b)
        if medium is Medium.WIRED:
            if frozenset({na.role, nb.role}) not in WIRED_PAIRS:
                raise IllegalMedium(
                    f"wired link not permitted between {na.role.value} and {nb.role.value}")
            if wired_capacity_bps is None:
                raise ValueError("wired link needs wired_capacity_bps")
        else:
            du, term = (na, nb) if na.role in DU_ROLES else (nb, na)
            if du.role not in DU_ROLES or term.role not in (Role.UE, Role.IAB_MT):
                raise IllegalMedium(
                    f"radio link needs a DU on one side and a UE/IAB-MT on the "
                    f"other, got {na.role.value} and {nb.role.value}")
            if carrier is None:
                raise MissingCarrier(f"radio link {a}-{b} has no carrier")
        if propagation_delay_s is None:
            propagation_delay_s = (self.distance(a, b) / radio.SPEED_OF_LIGHT
                                   if medium is Medium.RADIO else 0.0)
        lid = link_id or self._next_id("l")
        self.links.append(Link(id=lid, a=a, b=b, medium=medium, carrier=carrier,
                               wired_capacity_bps=wired_capacity_bps,
                               propagation_delay_s=propagation_delay_s))
        return lid

    # -- queries -------------------------------------------------------------

    def distance(self, a: str, b: str) -> float:
        pa, pb = self.node(a).position, self.node(b).position
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def links_of(self, node_id: str) -> list[Link]:
        return [l for l in self.links if node_id in (l.a, l.b)]

    def find_link(self, a: str, b: str) -> Optional[Link]:
        for l in self.links:
            if l.connects(a, b):
                return l
        return None

    def nodes_with_role(self, role: Role) -> list[Node]:
        return [n for n in self.nodes.values() if n.role is role]

    def the_cu(self) -> Node:
        return self.nodes_with_role(Role.CU)[0]

    def the_upf(self) -> Node:
        return self.nodes_with_role(Role.UPF)[0]

    def group_peer(self, node_id: str) -> Optional[Node]:
        """The IabMt paired with an IabDu (or vice versa) via owner_group."""
        n = self.node(node_id)
        if n.owner_group is None:
            return None
        want = Role.IAB_MT if n.role is Role.IAB_DU else Role.IAB_DU
        for other in self.nodes.values():
            if other.role is want and other.owner_group == n.owner_group:
                return other
        return None


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_topology(scenario: Scenario) -> ValidationReport:
    """Check that a scenario is a well-formed single-donor IAB deployment.

    Pure and idempotent; violations are returned as data, never raised.
    """
    v: list[str] = []
    nodes = scenario.nodes

    cus = scenario.nodes_with_role(Role.CU)
    upfs = scenario.nodes_with_role(Role.UPF)
    if len(cus) != 1:
        v.append(f"expected exactly one CU, found {len(cus)}")
    if len(upfs) != 1:
        v.append("no UPF" if not upfs else f"expected exactly one UPF, found {len(upfs)}")

    if cus:
        cu = cus[0]
        donor_wired = [l for l in scenario.links_of(cu.id)
                       if l.medium is Medium.WIRED
                       and nodes[l.other(cu.id)].role is Role.DONOR_DU]
        if not donor_wired:
            v.append("CU has no wired DonorDU")

    for n in nodes.values():
        if n.role is Role.IAB_DU:
            mts = [m for m in nodes.values()
                   if m.role is Role.IAB_MT and m.owner_group == n.owner_group
                   and n.owner_group is not None]
            if len(mts) != 1:
                v.append(f"IabDu {n.id} must share an owner_group with exactly "
                         f"one IabMt, found {len(mts)}")
        if n.role in (Role.UE, Role.IAB_MT):
            for l in scenario.links_of(n.id):
                if l.medium is Medium.WIRED:
                    peer = nodes[l.other(n.id)]
                    internal = (n.role is Role.IAB_MT and peer.role is Role.IAB_DU
                                and n.owner_group is not None
                                and peer.owner_group == n.owner_group)
                    if not internal:
                        v.append(f"{n.role.value} {n.id} has a wired link {l.id}")
        if n.role in RADIO_ROLES and n.tx_power_dbm is None:
            v.append(f"radio-capable node {n.id} has no tx_power")
        if n.role in DU_ROLES and n.carrier is None:
            v.append(f"DU {n.id} advertises no carrier")

    for l in scenario.links:
        for end in (l.a, l.b):
            if end not in nodes:
                v.append(f"link {l.id} references unknown node {end}")
                break
        else:
            ra, rb = nodes[l.a].role, nodes[l.b].role
            if l.medium is Medium.WIRED:
                if frozenset({ra, rb}) not in WIRED_PAIRS:
                    v.append(f"link {l.id}: wired link not permitted between "
                             f"{ra.value} and {rb.value}")
                if l.wired_capacity_bps is None or l.wired_capacity_bps <= 0:
                    v.append(f"link {l.id}: wired link needs positive capacity")
            else:
                du_side = {ra, rb} & DU_ROLES
                term_side = {ra, rb} & {Role.UE, Role.IAB_MT}
                if not du_side or not term_side:
                    v.append(f"link {l.id}: radio endpoints must pair a DU with "
                             f"a UE/IAB-MT")
                if l.carrier is None:
                    v.append(f"link {l.id}: radio link has no carrier")

    if scenario.duration_s <= 0:
        v.append("duration must be positive")

    for f in scenario.flows:
        if f.src not in nodes or f.dst not in nodes:
            v.append(f"flow {f.id} references unknown node")
            continue
        if not f.start_s < f.stop_s <= scenario.duration_s:
            v.append(f"flow {f.id}: need start < stop <= duration")
        if f.rate_bps <= 0:
            v.append(f"flow {f.id}: rate must be positive")

    return ValidationReport(violations=v)


def instantiate_iab_node(scenario: Scenario, position: tuple[float, float],
                         access_carrier: Carrier, tx_power_dbm: float,
                         at_s: float, mt_tx_power_dbm: float = 23.0,
                         group: Optional[str] = None) -> IabNodeDirective:
    """Queue a timed directive that brings up an IAB node at `at_s`.

    Coverage by a donor-side DU is checked when the directive fires, since
    the radio picture may have changed by then.
    """
    if at_s >= scenario.duration_s:
        raise DirectiveOutOfRange(
            f"directive at t={at_s} is not before duration {scenario.duration_s}")
    d = IabNodeDirective(at_s=at_s, position=tuple(position),
                         access_carrier=access_carrier,
                         tx_power_dbm=tx_power_dbm,
                         mt_tx_power_dbm=mt_tx_power_dbm, group=group)
    scenario.schedule.append(d)
    return d
