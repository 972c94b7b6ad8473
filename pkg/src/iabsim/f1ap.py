"""Control-plane state machines: F1 association, UE context, PDU session.

The state machines do not know about links or queues: the owner (normally
the simulation engine) injects `send`, `schedule` and `now` callbacks and
feeds delivered messages back through :meth:`ControlPlane.on_message`. That
keeps the machines unit-testable over a synchronous loopback.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .errors import (AlreadyEstablished, DuNotReady, MtDetached, NotActive,
                     NotCovered)
from .gtp import Path, Tunnel

SETUP_MAX_ATTEMPTS = 2  # one retry after 3x RTT, then fail


class AssocState(str, Enum):
    IDLE = "Idle"
    SETUP_REQUESTED = "SetupRequested"
    ACTIVE = "Active"
    RELEASED = "Released"


class UeState(str, Enum):
    DETACHED = "Detached"
    ATTACHING = "Attaching"
    CONNECTED = "Connected"


class SessionState(str, Enum):
    REQUESTED = "Requested"
    ESTABLISHED = "Established"
    RELEASED = "Released"


class MsgKind(str, Enum):
    SETUP_REQUEST = "SetupRequest"
    SETUP_RESPONSE = "SetupResponse"
    UE_CONTEXT_SETUP_REQUEST = "UeContextSetupRequest"
    UE_CONTEXT_SETUP_RESPONSE = "UeContextSetupResponse"
    DU_CONFIG_UPDATE = "DuConfigUpdate"
    DU_CONFIG_UPDATE_ACK = "DuConfigUpdateAck"


@dataclass
class F1Message:
    kind: MsgKind
    association: str  # keyed by DU id
    payload: dict = field(default_factory=dict)


@dataclass
class F1Association:
    cu: str
    du: str
    state: AssocState = AssocState.IDLE
    transport: Optional[Path] = None
    rtt_s: float = 0.0
    attempts: int = 0


@dataclass
class UeContext:
    ue: str
    serving_du: str
    cu: str
    state: UeState = UeState.DETACHED
    drb: Optional[tuple[Tunnel, Tunnel]] = None  # (uplink, downlink)


@dataclass
class PduSession:
    mt: str
    upf: str
    uplink: Tunnel
    downlink: Tunnel
    state: SessionState = SessionState.REQUESTED


class ControlPlane:
    def __init__(self, *,
                 send: Callable[[F1Message, str, str], None],
                 schedule: Callable[[float, Callable[[], None]], None],
                 now: Callable[[], float],
                 transition: Callable[[str, str, str, str], None]):
        self._send = send
        self._schedule = schedule
        self._now = now
        self._transition = transition
        self.associations: dict[str, F1Association] = {}
        self.ue_contexts: dict[str, UeContext] = {}
        self.sessions: dict[str, PduSession] = {}
        # Engine hooks; default no-ops so the module tests can omit them.
        self.on_association_active: Callable[[str], None] = lambda du: None
        self.on_ue_connected: Callable[[str], None] = lambda ue: None
        self.on_du_carrier_update: Callable[[str, object], None] = lambda du, c: None

    # -- state helpers -------------------------------------------------------

    def _move_assoc(self, assoc: F1Association, to: AssocState, cause: str):
        frm = assoc.state
        assoc.state = to
        self._transition(f"f1:{assoc.du}", frm.value, to.value, cause)

    def _move_ue(self, ctx: UeContext, to: UeState, cause: str):
        frm = ctx.state
        ctx.state = to
        self._transition(f"ue:{ctx.ue}", frm.value, to.value, cause)

    def association_active(self, du: str) -> bool:
        a = self.associations.get(du)
        return a is not None and a.state is AssocState.ACTIVE

    # -- procedures -------------------------------------------------------------

    def f1_setup(self, cu: str, du: str, transport: Path, rtt_s: float) -> F1Association:
        """Start the setup handshake; Active after one request/response trip."""
        assoc = self.associations.get(du)
        if assoc is None or assoc.state in (AssocState.IDLE, AssocState.RELEASED):
            assoc = F1Association(cu=cu, du=du)
            self.associations[du] = assoc
        assoc.transport = transport
        assoc.rtt_s = rtt_s
        assoc.attempts = 1
        self._move_assoc(assoc, AssocState.SETUP_REQUESTED, "f1-setup")
        self._send_setup_request(assoc)
        return assoc

    def _send_setup_request(self, assoc: F1Association):
        self._send(F1Message(MsgKind.SETUP_REQUEST, assoc.du), assoc.du, assoc.cu)
        attempt = assoc.attempts
        self._schedule(3.0 * assoc.rtt_s, lambda: self._setup_timeout(assoc, attempt))

    def _setup_timeout(self, assoc: F1Association, attempt: int):
        if assoc.state is not AssocState.SETUP_REQUESTED or assoc.attempts != attempt:
            return
        if assoc.attempts >= SETUP_MAX_ATTEMPTS:
            self._move_assoc(assoc, AssocState.IDLE, "transport-down")
            return
        assoc.attempts += 1
        self._send_setup_request(assoc)

    def ue_attach(self, ue: str, du: str, cu: str, covered: bool) -> UeContext:
        """Begin attachment; Connected once the UE context handshake completes."""
        if not covered:
            raise NotCovered(f"{ue} is not covered by {du}")
        if not self.association_active(du):
            raise DuNotReady(f"F1 association of {du} is not Active")
        ctx = UeContext(ue=ue, serving_du=du, cu=cu)
        self.ue_contexts[ue] = ctx
        self._move_ue(ctx, UeState.ATTACHING, "attach")
        self._send(F1Message(MsgKind.UE_CONTEXT_SETUP_REQUEST, du, {"ue": ue}),
                   cu, du)
        return ctx

    def establish_pdu_session(self, mt: str, upf: str,
                              open_tunnel: Callable[[str, str, str], Tunnel]
                              ) -> PduSession:
        """Core signalling collapsed to tunnel allocation + state change."""
        ctx = self.ue_contexts.get(mt)
        if ctx is None or ctx.state is not UeState.CONNECTED:
            raise MtDetached(f"IAB-MT {mt} has no Connected UE context")
        if mt in self.sessions:
            raise AlreadyEstablished(f"{mt} already has a PDU session")
        uplink = open_tunnel(mt, upf, f"mt-session-ul:{mt}")
        downlink = open_tunnel(upf, mt, f"mt-session-dl:{mt}")
        session = PduSession(mt=mt, upf=upf, uplink=uplink, downlink=downlink)
        self.sessions[mt] = session
        self._transition(f"pdu:{mt}", SessionState.REQUESTED.value,
                         SessionState.ESTABLISHED.value, "pdu-session-establish")
        session.state = SessionState.ESTABLISHED
        return session

    def du_config_update(self, du: str, new_carrier) -> None:
        assoc = self.associations.get(du)
        if assoc is None or assoc.state is not AssocState.ACTIVE:
            raise NotActive(f"association of {du} is not Active")
        self._send(F1Message(MsgKind.DU_CONFIG_UPDATE, du,
                             {"carrier": new_carrier}), assoc.cu, du)

    # -- message delivery ---------------------------------------------------------

    def deliverable(self, msg: F1Message) -> bool:
        """False when the association is Idle/Released; such messages drop."""
        assoc = self.associations.get(msg.association)
        return assoc is not None and assoc.state in (AssocState.SETUP_REQUESTED,
                                                     AssocState.ACTIVE)

    def on_message(self, msg: F1Message) -> None:
        assoc = self.associations[msg.association]
        kind = msg.kind
        if kind is MsgKind.SETUP_REQUEST:
            self._send(F1Message(MsgKind.SETUP_RESPONSE, assoc.du), assoc.cu, assoc.du)
        elif kind is MsgKind.SETUP_RESPONSE:
            if assoc.state is AssocState.SETUP_REQUESTED:
                self._move_assoc(assoc, AssocState.ACTIVE, "setup-response")
                self.on_association_active(assoc.du)
        elif kind is MsgKind.UE_CONTEXT_SETUP_REQUEST:
            self._send(F1Message(MsgKind.UE_CONTEXT_SETUP_RESPONSE, assoc.du,
                                 dict(msg.payload)), assoc.du, assoc.cu)
        elif kind is MsgKind.UE_CONTEXT_SETUP_RESPONSE:
            ue = msg.payload["ue"]
            ctx = self.ue_contexts[ue]
            if ctx.state is UeState.ATTACHING:
                self._move_ue(ctx, UeState.CONNECTED, "ue-context-setup")
                self.on_ue_connected(ue)
        elif kind is MsgKind.DU_CONFIG_UPDATE:
            self._send(F1Message(MsgKind.DU_CONFIG_UPDATE_ACK, assoc.du,
                                 dict(msg.payload)), assoc.du, assoc.cu)
        elif kind is MsgKind.DU_CONFIG_UPDATE_ACK:
            self.on_du_carrier_update(assoc.du, msg.payload["carrier"])
