from .engine import DropReason, Packet, PacketKind, SimulationTrace, Simulator
from .routing import (MutationMode, Route, RoutingError, RoutingState, install_initial_routes,
                      k_shortest_paths, mutate_routes, traceroute)
from .topology import Link, Node, Role, Topology, TopologyError, build_topology, paper_like, parse_topology
