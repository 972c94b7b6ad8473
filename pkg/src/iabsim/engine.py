"""Deterministic discrete-event loop over the scenario graph.

One single-threaded event queue drives everything: flow packet injection,
per-link FIFO serialization, control handshakes, timed scenario directives.
Ties are broken by a global sequence number, so two runs of the same
scenario + seed produce identical traces.
"""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Optional

from . import radio
from .errors import (IabSimError, NoDonorCoverage, NoRoute, RoutingLoop,
                     ScenarioInvalid, TransportDown)
from .f1ap import AssocState, ControlPlane, F1Message, UeState
from .gtp import (F1TransportTunnels, Forwarder, Packet, Path, PathMode,
                  TunnelTable, UePlaneTunnels, build_f1_transport_path,
                  install_routes, install_ue_routes)
from .topology import (DU_ROLES, DuConfigUpdateDirective, FlowSpec,
                       IabNodeDirective, Link, Medium, Node, Role, Scenario,
                       validate_topology)
from .trace import SCHEMA_VERSION, Trace, ControlDelivery, Delivery, measure_throughput

__all__ = ["Simulator", "run", "link_capacity", "measure_throughput", "PathMode"]


def link_capacity(scenario: Scenario, link: Link, tx_node_id: str) -> float:
    """Capacity of one link direction; wired links pass their rate through."""
    if link.medium is Medium.WIRED:
        return link.wired_capacity_bps
    params = scenario.radio_params
    if link.radio_overrides:
        params = params.overridden(**link.radio_overrides)
    tx = scenario.node(tx_node_id)
    rx = scenario.node(link.other(tx_node_id))
    downlink = tx.role in DU_ROLES
    dist = max(scenario.distance(tx.id, rx.id), params.reference_distance_m)
    carrier = link.carrier
    s = radio.snr_db(tx.tx_power_dbm, carrier.center_frequency_hz,
                     carrier.bandwidth_hz, dist, params)
    return radio.shannon_capacity_bps(carrier.bandwidth_hz, s, params, downlink)


@dataclass(slots=True)
class _LinkDir:
    next_free: float = 0.0
    occupancy: int = 0
    busy_s: float = 0.0
    bytes_total: int = 0
    bytes_header: int = 0
    packets: int = 0


@dataclass
class _FlowStats:
    spec: FlowSpec
    injected: int = 0
    delivered: int = 0
    dropped: int = 0
    latency_sum_s: float = 0.0
    hops_sum: int = 0
    payload_bytes_delivered: int = 0
    overhead_bytes: int = 0


class Simulator:
    def __init__(self, scenario: Scenario, mode: PathMode = PathMode.UPF_REROUTE,
                 seed: Optional[int] = None, trace_level: str = "full"):
        report = validate_topology(scenario)
        if not report.ok:
            raise ScenarioInvalid("; ".join(report.violations))
        self.scn = scenario
        self.mode = PathMode(mode)
        self.seed = scenario.seed if seed is None else seed
        self.rng = random.Random(self.seed)
        self.trace_full = trace_level == "full"
        self.now = 0.0
        proto = scenario.protocol
        self.proto = proto
        self.trace = Trace(mode=self.mode.value, seed=self.seed,
                           flow_ids=tuple(f.id for f in scenario.flows))
        self.tunnels = TunnelTable(self.rng, gtp_header_bytes=proto.gtp_header_bytes)
        self.fwd = Forwarder(self.tunnels, ttl=proto.ttl,
                             bap_header_bytes=proto.bap_header_bytes)
        self.cp = ControlPlane(send=self._send_control,
                               schedule=self._schedule_timer,
                               now=lambda: self.now,
                               transition=self._transition)
        self.cp.on_association_active = self._assoc_active
        self.cp.on_ue_connected = self._ue_connected
        self.cp.on_du_carrier_update = self._du_carrier_update
        self._heap: list = []
        self._heap_seq = 0
        self._ctl_seq = 0
        self._link_dirs: dict[tuple[str, str], _LinkDir] = {}
        self._flows = {f.id: _FlowStats(spec=f) for f in scenario.flows}
        self._transport: dict[str, F1TransportTunnels] = {}
        self._f1_paths: dict[str, tuple[Path, Path]] = {}
        self._ue_plane: dict[str, UePlaneTunnels] = {}
        self._ran = False

    # -- scheduling ------------------------------------------------------------

    def _schedule(self, t: float, fn) -> None:
        heapq.heappush(self._heap, (t, self._heap_seq, fn))
        self._heap_seq += 1

    def _schedule_timer(self, delay_s: float, fn) -> None:
        def fire():
            self._emit("TimerExpiry", location="control", subject="timer")
            fn()
        self._schedule(self.now + delay_s, fire)

    def _emit(self, kind: str, location: str, subject: str, **fields):
        self.trace.emit(self.now, kind, location, subject, **fields)

    def _transition(self, entity: str, frm: str, to: str, cause: str) -> None:
        self._emit("StateTransition", location=entity, subject=entity,
                   from_state=frm, to_state=to, cause=cause)

    # -- run loop -----------------------------------------------------------------

    def run(self) -> Trace:
        if self._ran:
            raise ScenarioInvalid("Simulator instances are single-use")
        self._ran = True
        self._schedule(0.0, self._bootstrap)
        for d in self.scn.schedule:
            self._schedule(d.at_s, lambda d=d: self._apply_directive(d))
        for f in self.scn.flows:
            self._schedule(f.start_s, lambda f=f: self._inject(f, 0))
        duration = self.scn.duration_s
        while self._heap and self._heap[0][0] <= duration:
            t, _, fn = heapq.heappop(self._heap)
            self.now = t
            fn()
        self.now = duration
        self._finalize()
        return self.trace

    def _bootstrap(self):
        cu = self.scn.the_cu().id
        for du in self.scn.nodes_with_role(Role.DONOR_DU):
            link = self.scn.find_link(cu, du.id)
            if link is None or link.medium is not Medium.WIRED:
                continue
            path = Path(hops=(du.id, cu), mode=self.mode)
            install_routes(self.scn, self.fwd, path, None)
            rtt = 2.0 * self._path_delay(path.hops)
            self.cp.f1_setup(cu, du.id, path, rtt)

    def _path_delay(self, hops: tuple[str, ...],
                    size_bytes: Optional[int] = None) -> float:
        """Nominal one-way latency of a control message along `hops`."""
        size = size_bytes or self.proto.control_message_bytes
        total = 0.0
        for a, b in zip(hops, hops[1:]):
            link = self.scn.find_link(a, b)
            if link is None:
                raise TransportDown(f"no link between {a} and {b}")
            cap = link_capacity(self.scn, link, a)
            total += size * 8 / cap + link.propagation_delay_s
        return total

    # -- directives -------------------------------------------------------------

    def _apply_directive(self, d) -> None:
        self._emit("Directive", location="scenario", subject=type(d).__name__,
                   at=d.at_s)
        try:
            if isinstance(d, IabNodeDirective):
                self._instantiate_iab(d)
            elif isinstance(d, DuConfigUpdateDirective):
                self.cp.du_config_update(d.du, d.carrier)
            else:
                raise ScenarioInvalid(f"unknown directive {d!r}")
        except (IabSimError, ValueError) as exc:
            # Directive failures are trace data, not run aborts.
            self._emit("Drop", location="scenario", subject=type(d).__name__,
                       cause=type(exc).__name__, detail=str(exc))

    def _instantiate_iab(self, d: IabNodeDirective) -> None:
        params = self.scn.radio_params
        best, best_rx = None, None
        for du in self.scn.nodes_with_role(Role.DONOR_DU):
            dist = max(
                ((d.position[0] - du.position[0]) ** 2
                 + (d.position[1] - du.position[1]) ** 2) ** 0.5,
                params.reference_distance_m)
            if not radio.is_covered(du.tx_power_dbm,
                                    du.carrier.center_frequency_hz, dist, params):
                continue
            rx = radio.rx_power_dbm(du.tx_power_dbm,
                                    du.carrier.center_frequency_hz, dist, params)
            if best_rx is None or rx > best_rx:
                best, best_rx = du, rx
        if best is None:
            raise NoDonorCoverage(f"no donor-side DU covers {d.position}")
        group = d.group or f"iab{1 + len(self.scn.nodes_with_role(Role.IAB_DU))}"
        mt_id = self.scn.add_node(Role.IAB_MT, d.position,
                                  tx_power_dbm=d.mt_tx_power_dbm,
                                  owner_group=group, node_id=f"{group}-mt")
        du_id = self.scn.add_node(Role.IAB_DU, d.position,
                                  tx_power_dbm=d.tx_power_dbm, owner_group=group,
                                  carrier=d.access_carrier, node_id=f"{group}-du")
        self.scn.add_link(mt_id, du_id, Medium.WIRED,
                          wired_capacity_bps=1e15, propagation_delay_s=0.0)
        self.scn.add_link(best.id, mt_id, Medium.RADIO, carrier=best.carrier)
        self._start_ue_attach(self.scn.node(mt_id), best)

    # -- control orchestration -------------------------------------------------------

    def _start_ue_attach(self, ue: Node, du: Node) -> None:
        params = self.scn.radio_params
        dist = max(self.scn.distance(ue.id, du.id), params.reference_distance_m)
        covered = radio.is_covered(du.tx_power_dbm,
                                   du.carrier.center_frequency_hz, dist, params)
        self.cp.ue_attach(ue.id, du.id, self.scn.the_cu().id, covered)
        if self.scn.find_link(ue.id, du.id) is None:
            self.scn.add_link(du.id, ue.id, Medium.RADIO, carrier=du.carrier)

    def _assoc_active(self, du_id: str) -> None:
        du = self.scn.node(du_id)
        params = self.scn.radio_params
        for ue in self.scn.nodes_with_role(Role.UE):
            ctx = self.cp.ue_contexts.get(ue.id)
            if ctx is not None and ctx.state is not UeState.DETACHED:
                continue
            dist = max(self.scn.distance(ue.id, du.id), params.reference_distance_m)
            if radio.is_covered(du.tx_power_dbm, du.carrier.center_frequency_hz,
                                dist, params):
                self._start_ue_attach(ue, du)

    def _ue_connected(self, ue_id: str) -> None:
        node = self.scn.node(ue_id)
        if node.role is Role.IAB_MT:
            self._bring_up_iab_node(ue_id)
        else:
            self._install_ue_plane(ue_id)

    def _bring_up_iab_node(self, mt_id: str) -> None:
        cu = self.scn.the_cu().id
        upf = self.scn.the_upf().id
        session = self.cp.establish_pdu_session(mt_id, upf, self.tunnels.open_tunnel)
        iab_du = self.scn.group_peer(mt_id).id
        bap_ul = bap_dl = None
        if self.mode is PathMode.BAP_BYPASS:
            bap_ul = self.fwd.next_bap_route_id()
            bap_dl = self.fwd.next_bap_route_id()
        transport = F1TransportTunnels(mt_session_ul=session.uplink,
                                       mt_session_dl=session.downlink,
                                       bap_route_ul=bap_ul, bap_route_dl=bap_dl)
        donor_active = self.cp.association_active(
            self.cp.ue_contexts[mt_id].serving_du)
        path_ul = build_f1_transport_path(self.scn, iab_du, self.mode,
                                          session_established=True,
                                          donor_association_active=donor_active)
        path_dl = path_ul.reversed()
        install_routes(self.scn, self.fwd, path_ul, transport)
        install_routes(self.scn, self.fwd, path_dl, transport)
        self._transport[iab_du] = transport
        self._f1_paths[iab_du] = (path_ul, path_dl)
        rtt = self._path_delay(path_ul.hops) + self._path_delay(path_dl.hops)
        self.cp.f1_setup(cu, iab_du, path_ul, rtt)

    def _install_ue_plane(self, ue_id: str) -> None:
        ctx = self.cp.ue_contexts[ue_id]
        cu = self.scn.the_cu().id
        upf = self.scn.the_upf().id
        du = ctx.serving_du
        tn = UePlaneTunnels(
            session_ul=self.tunnels.open_tunnel(cu, upf, f"sess-ul:{ue_id}"),
            session_dl=self.tunnels.open_tunnel(upf, cu, f"sess-dl:{ue_id}"),
            drb_ul=self.tunnels.open_tunnel(du, cu, f"drb-ul:{ue_id}"),
            drb_dl=self.tunnels.open_tunnel(cu, du, f"drb-dl:{ue_id}"))
        ctx.drb = (tn.drb_ul, tn.drb_dl)
        install_ue_routes(self.scn, self.fwd, ue_id, du, tn, self.mode,
                          transport=self._transport.get(du))
        self._ue_plane[ue_id] = tn

    def _du_carrier_update(self, du_id: str, carrier) -> None:
        du = self.scn.node(du_id)
        old = du.carrier.band_label if du.carrier else "none"
        du.carrier = carrier
        for link in self.scn.links_of(du_id):
            if link.medium is Medium.RADIO:
                link.carrier = carrier
        self._transition(f"du:{du_id}", f"carrier:{old}",
                         f"carrier:{carrier.band_label}", "du-config-update")

    def du_config_update(self, du_id: str, carrier) -> None:
        """Queue a carrier reconfiguration now (also reachable via schedule)."""
        self.cp.du_config_update(du_id, carrier)

    # -- packets ------------------------------------------------------------------

    def _inject(self, f: FlowSpec, i: int) -> None:
        stats = self._flows[f.id]
        pkt = Packet(flow_id=f.id, src=f.src, dst=f.dst,
                     payload_size_bytes=f.packet_size_bytes,
                     created_at_s=self.now, seq=i, ttl=self.proto.ttl)
        stats.injected += 1
        self._handle(f.src, pkt, via_link=False)
        interval = f.packet_size_bytes * 8 / f.rate_bps
        next_t = f.start_s + (i + 1) * interval
        if next_t < f.stop_s:
            self._schedule(next_t, lambda: self._inject(f, i + 1))

    def _send_control(self, msg: F1Message, src: str, dst: str) -> None:
        self._ctl_seq += 1
        pkt = Packet(flow_id=f"f1c:{msg.association}", src=src, dst=dst,
                     payload_size_bytes=self.proto.control_message_bytes,
                     created_at_s=self.now, seq=self._ctl_seq, kind="control",
                     control=msg, ttl=self.proto.ttl)
        self._handle(src, pkt, via_link=False)

    def _drop(self, node: str, pkt: Packet, cause: str, detail: str = "") -> None:
        if pkt.kind == "user":
            self._flows[pkt.flow_id].dropped += 1
        fields = dict(flow=pkt.flow_id, pkt=pkt.seq, cause=cause,
                      depth=pkt.depth, wire_size=pkt.wire_size_bytes,
                      teids=pkt.teids_in_stack())
        if detail:
            fields["detail"] = detail
        self._emit("Drop", location=node, subject=pkt.flow_id, **fields)

    def _handle(self, node: str, pkt: Packet, via_link: bool) -> None:
        try:
            next_hop, pkt = self.fwd.forward(node, pkt)
        except NoRoute as exc:
            self._drop(node, pkt, "no-route", str(exc))
            return
        except RoutingLoop as exc:
            self._drop(node, pkt, "ttl-expired", str(exc))
            return
        if via_link and self.trace_full:
            self._emit("Arrival", location=node, subject=pkt.flow_id,
                       pkt=pkt.seq, depth=pkt.depth,
                       wire_size=pkt.wire_size_bytes, teids=pkt.teids_in_stack(),
                       delivered=next_hop is None)
        if next_hop is None:
            self._deliver(node, pkt)
            return
        link = self.scn.find_link(node, next_hop)
        if link is None:
            self._drop(node, pkt, "transport-down",
                       f"no link {node}->{next_hop}")
            return
        self._transmit(link, node, pkt)

    def _deliver(self, node: str, pkt: Packet) -> None:
        if pkt.kind == "control":
            msg: F1Message = pkt.control
            if not self.cp.deliverable(msg):
                self._drop(node, pkt, "assoc-inactive")
                return
            self.trace.control_deliveries.append(ControlDelivery(
                time=self.now, kind=msg.kind.value, association=msg.association,
                hop_log=tuple(pkt.hop_log)))
            self.cp.on_message(msg)
            return
        stats = self._flows[pkt.flow_id]
        stats.delivered += 1
        stats.latency_sum_s += self.now - pkt.created_at_s
        stats.hops_sum += len(pkt.hop_log)
        stats.payload_bytes_delivered += pkt.payload_size_bytes
        self.trace.deliveries.append(Delivery(
            time=self.now, flow_id=pkt.flow_id,
            payload_bytes=pkt.payload_size_bytes,
            created_at=pkt.created_at_s, hop_log=tuple(pkt.hop_log)))

    def _linkdir(self, link: Link, src: str) -> _LinkDir:
        key = (link.id, src)
        d = self._link_dirs.get(key)
        if d is None:
            d = self._link_dirs[key] = _LinkDir()
        return d

    def _transmit(self, link: Link, src: str, pkt: Packet) -> None:
        d = self._linkdir(link, src)
        if d.occupancy >= self.proto.link_buffer_packets:
            self._drop(src, pkt, "queue-overflow", f"link {link.id}")
            return
        cap = link_capacity(self.scn, link, src)
        if cap <= 0:
            self._drop(src, pkt, "no-capacity", f"link {link.id}")
            return
        wire = pkt.wire_size_bytes
        start = max(self.now, d.next_free)
        finish = start + wire * 8 / cap
        d.next_free = finish
        d.occupancy += 1
        d.busy_s += finish - start
        d.bytes_total += wire
        d.bytes_header += wire - pkt.payload_size_bytes
        d.packets += 1
        if pkt.kind == "user":
            self._flows[pkt.flow_id].overhead_bytes += wire - pkt.payload_size_bytes
        dst = link.other(src)
        prop = link.propagation_delay_s

        def depart():
            d.occupancy -= 1
            if self.trace_full:
                self._emit("Departure", location=link.id, subject=pkt.flow_id,
                           pkt=pkt.seq, src=src, dst=dst, depth=pkt.depth,
                           wire_size=wire, teids=pkt.teids_in_stack())
            self._schedule(self.now + prop, lambda: self._handle(dst, pkt, True))

        self._schedule(finish, depart)

    # -- summary -------------------------------------------------------------------

    def _finalize(self) -> None:
        duration = self.scn.duration_s
        flows = {}
        total_header = sum(d.bytes_header for d in self._link_dirs.values())
        total_bytes = sum(d.bytes_total for d in self._link_dirs.values())
        for fid, st in self._flows.items():
            f = st.spec
            flows[fid] = {
                "flow_id": fid,
                "offered_bps": st.injected * f.packet_size_bytes * 8
                               / (f.stop_s - f.start_s),
                "injected": st.injected,
                "delivered": st.delivered,
                "dropped": st.dropped,
                "in_flight": st.injected - st.delivered - st.dropped,
                "goodput_bps": st.payload_bytes_delivered * 8 / duration,
                "mean_latency_s": (st.latency_sum_s / st.delivered
                                   if st.delivered else 0.0),
                "mean_hop_count": (st.hops_sum / st.delivered
                                   if st.delivered else 0.0),
                "overhead_bytes": st.overhead_bytes,
            }
        links = {}
        for (lid, src), d in sorted(self._link_dirs.items()):
            link = next(l for l in self.scn.links if l.id == lid)
            links[f"{lid}:{src}->{link.other(src)}"] = {
                "utilization": d.busy_s / duration,
                "overhead_fraction": (d.bytes_header / d.bytes_total
                                      if d.bytes_total else 0.0),
                "bytes_total": d.bytes_total,
                "bytes_header": d.bytes_header,
                "packets": d.packets,
            }
        self.trace.summary = {
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode.value,
            "seed": self.seed,
            "duration_s": duration,
            "flows": flows,
            "links": links,
            "totals": {
                "header_bytes": total_header,
                "bytes": total_bytes,
                "events": len(self.trace.events),
            },
        }


def run(scenario: Scenario, mode: PathMode = PathMode.UPF_REROUTE,
        seed: Optional[int] = None, trace_level: str = "full") -> Trace:
    """One-shot convenience wrapper around :class:`Simulator`."""
    return Simulator(scenario, mode=mode, seed=seed, trace_level=trace_level).run()
