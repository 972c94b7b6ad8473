"""Exception hierarchy shared by all iabsim modules."""


class IabSimError(Exception):
    """Base class for all simulator errors."""


# --- topology -------------------------------------------------------------

class TopologyError(IabSimError):
    pass


class DuplicateCu(TopologyError):
    pass


class DuplicateUpf(TopologyError):
    pass


class UnknownNode(TopologyError):
    pass


class IllegalMedium(TopologyError):
    pass


class MissingCarrier(TopologyError):
    pass


class NoDonorCoverage(TopologyError):
    pass


class DirectiveOutOfRange(TopologyError):
    pass


# --- radio ----------------------------------------------------------------

class TooClose(IabSimError):
    """Distance below the pathloss reference distance."""


# --- tunneling / routing ---------------------------------------------------

class TunnelError(IabSimError):
    pass


class DepthExceeded(TunnelError):
    """Encapsulation would nest more than two headers; a routing bug."""


class TeidMismatch(TunnelError):
    pass


class EmptyStack(TunnelError):
    pass


class TeidExhausted(TunnelError):
    pass


class RoutingError(IabSimError):
    pass


class NoRoute(RoutingError):
    def __init__(self, node, key):
        super().__init__(f"no route at {node} for {key}")
        self.node = node
        self.key = key


class ConflictingEntry(RoutingError):
    pass


class RoutingLoop(RoutingError):
    pass


class InvalidPath(RoutingError):
    pass


# --- control plane ----------------------------------------------------------

class ControlError(IabSimError):
    pass


class TransportDown(ControlError):
    pass


class NotCovered(ControlError):
    pass


class DuNotReady(ControlError):
    pass


class MtDetached(ControlError):
    pass


class AlreadyEstablished(ControlError):
    pass


class NotActive(ControlError):
    pass


class SessionNotEstablished(ControlError):
    pass


class AssociationNotActive(ControlError):
    pass


# --- engine / io -------------------------------------------------------------

class ScenarioInvalid(IabSimError):
    pass


class UnknownFlow(IabSimError):
    pass


class ParseError(IabSimError):
    pass


class SchemaMismatch(IabSimError):
    pass
