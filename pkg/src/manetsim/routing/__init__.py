from .aodv import AodvAgent
from .base import PacketEnvelope, RoutingAgent, SendBuffer
from .dsdv import DsdvAgent
from .dsr import DsrAgent, RouteCache

AGENTS = {"aodv": AodvAgent, "dsdv": DsdvAgent, "dsr": DsrAgent}

__all__ = ["AGENTS", "AodvAgent", "DsdvAgent", "DsrAgent", "PacketEnvelope", "RouteCache",
           "RoutingAgent", "SendBuffer"]
