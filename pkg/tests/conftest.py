import pytest

from strategic_rrm.netsim.topology import Role, Topology


def line_topology(cap=10e6, prop=100, queue=100, n_switches=1):
    """h1 - s1 - ... - sN - h2, plus a decoy on sN so the topology validates."""
    topo = Topology()
    sw = [f"s{i + 1}" for i in range(n_switches)]
    for s in sw:
        topo.add_node(s, Role.SWITCH)
    topo.add_node("h1", Role.CLIENT, sw[0])
    topo.add_node("h2", Role.TARGET, sw[-1])
    topo.add_node("d1", Role.DECOY, sw[-1])
    topo.add_link("h1", sw[0], cap, prop, queue)
    for a, b in zip(sw, sw[1:]):
        topo.add_link(a, b, cap, prop, queue)
    topo.add_link(sw[-1], "h2", cap, prop, queue)
    topo.add_link("d1", sw[-1], cap, prop, queue)
    return topo.validate()


@pytest.fixture
def line():
    return line_topology()


ACCEPTANCE_LINES: list[str] = []


def record_criterion(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
