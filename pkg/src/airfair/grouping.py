"""Group formation and slotted scheduling around a group owner.

Nodes that meet exchange a contact profile: who else is reachable, for how
long (the predicted contact duration, PCD), and how much data each peer has
queued.  Every node keeps a contact table with one entry per other member;
join and leave events update it.  The group owner (GO) is picked among the
nodes that reach everyone as the one with the most queued data, because
relaying its traffic costs the group the least total broadcast time.

Once airtime has been allocated, transmission is organized in a round-robin
slot cycle: each client gets an upload slot immediately followed by its
broadcast slot (the GO relays), the GO gets a plain broadcast slot, and the
cycle repeats until the interval ends, truncating the final cycle mid-slot.
Slot widths scale a basic slot so that every node's whole-slot share matches
its allocated share of channel time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .bargaining import Allocation

__all__ = [
    "ContactEntry",
    "ContactTable",
    "Join",
    "Leave",
    "SelfLeave",
    "update_contact_table",
    "ConnectivityGraph",
    "NoGoCandidateError",
    "ScheduleError",
    "select_roles",
    "total_broadcast_time",
    "allocation_interval",
    "select_transmission_mode",
    "MODE_UNICAST_PAIR",
    "MODE_GO_COORDINATED",
    "slot_sizes",
    "SlotEntry",
    "Schedule",
    "build_schedule",
    "default_cycle_order",
    "schedule_csv_rows",
]

MODE_UNICAST_PAIR = "unicast-pair"
MODE_GO_COORDINATED = "go-coordinated"


class NoGoCandidateError(RuntimeError):
    """No member is adjacent to every other member."""


class ScheduleError(ValueError):
    """A schedule cannot be built from the given slots and interval."""


@dataclass(frozen=True)
class ContactEntry:
    id: str
    pcd: float          # predicted remaining contact duration, seconds
    data_size: float    # megabits the peer has queued


@dataclass(frozen=True)
class ContactTable:
    """One node's view of the group: an entry per other current member."""

    owner: str
    entries: tuple[ContactEntry, ...] = ()

    def member_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries)

    def entry_for(self, node_id: str) -> ContactEntry:
        for e in self.entries:
            if e.id == node_id:
                return e
        raise KeyError(node_id)


@dataclass(frozen=True)
class Join:
    id: str
    pcd: float
    data_size: float


@dataclass(frozen=True)
class Leave:
    id: str


@dataclass(frozen=True)
class SelfLeave:
    pass


def update_contact_table(table: ContactTable, event) -> ContactTable:
    """Apply a membership event and return the updated table.

    Joins append an entry (duplicate ids rejected), leaves remove one
    (unknown ids rejected), and a self-leave empties the table.
    """
    if isinstance(event, Join):
        if event.id == table.owner or event.id in table.member_ids():
            raise ValueError(f"duplicate join for {event.id!r}")
        return ContactTable(table.owner, table.entries + (ContactEntry(event.id, event.pcd, event.data_size),))
    if isinstance(event, Leave):
        if event.id not in table.member_ids():
            raise ValueError(f"leave for unknown member {event.id!r}")
        return ContactTable(table.owner, tuple(e for e in table.entries if e.id != event.id))
    if isinstance(event, SelfLeave):
        return ContactTable(table.owner, ())
    raise TypeError(f"unknown event {event!r}")


class ConnectivityGraph:
    """Undirected reachability between nodes (symmetric, no self loops)."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]] = ()):
        self.nodes = set(nodes)
        self.adjacency: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in edges:
            self.add_edge(a, b)

    def add_edge(self, a: str, b: str) -> None:
        if a == b:
            raise ValueError("self loops are not allowed")
        for n in (a, b):
            if n not in self.nodes:
                self.nodes.add(n)
                self.adjacency[n] = set()
        self.adjacency[a].add(b)
        self.adjacency[b].add(a)

    @classmethod
    def complete(cls, nodes: Iterable[str]) -> "ConnectivityGraph":
        nodes = list(nodes)
        return cls(nodes, [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]])

    def reaches_all(self, node: str, members: Iterable[str]) -> bool:
        others = set(members) - {node}
        return others <= self.adjacency.get(node, set())

    def restricted(self, members: Iterable[str]) -> "ConnectivityGraph":
        members = set(members)
        g = ConnectivityGraph(members)
        for a in members:
            for b in self.adjacency.get(a, ()):
                if b in members and a < b:
                    g.add_edge(a, b)
        return g


def select_roles(tables: Mapping[str, ContactTable], graph: ConnectivityGraph) -> dict[str, str]:
    """Pick the GO among members adjacent to all others, by largest queued
    load; ties break toward the smallest id.  Loads are read off the peers'
    table entries.  Returns a role per member id ("go" or "client")."""
    members = sorted(tables)
    candidates = [m for m in members if graph.reaches_all(m, members)]
    if not candidates:
        raise NoGoCandidateError("no member reaches every other member")

    def load_of(m: str) -> float:
        for other, table in tables.items():
            if other == m:
                continue
            try:
                return table.entry_for(m).data_size
            except KeyError:
                continue
        return 0.0

    go = None
    go_load = -np.inf
    for m in sorted(candidates):
        load = load_of(m)
        if load > go_load:
            go, go_load = m, load
    return {m: ("go" if m == go else "client") for m in members}


def total_broadcast_time(loads: Mapping[str, float], go_candidate: str, rate: float) -> float:
    """Channel seconds to disseminate everything if ``go_candidate`` relays:
    its own load goes out once, every client load is uploaded then relayed."""
    if go_candidate not in loads:
        raise KeyError(go_candidate)
    if not (rate > 0):
        raise ValueError("rate must be > 0")
    total = loads[go_candidate] + 2.0 * sum(v for k, v in loads.items() if k != go_candidate)
    return float(total / rate)


def allocation_interval(table: ContactTable, go_id: str) -> float:
    """Allocation horizon: the smallest PCD between the GO and any member."""
    if table.owner != go_id:
        raise ValueError(f"need the GO's own table, got {table.owner!r}")
    if not table.entries:
        raise ValueError("no members to allocate for")
    return float(min(e.pcd for e in table.entries))


def select_transmission_mode(group_size: int) -> str:
    """Two nodes talk directly (no relay, no upload slots); three or more
    go through the GO."""
    if group_size < 2:
        raise ValueError("transmission needs at least two nodes")
    return MODE_UNICAST_PAIR if group_size == 2 else MODE_GO_COORDINATED


def slot_sizes(allocation: Allocation, betas: np.ndarray, t_slot: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Whole, upload, and broadcast slot seconds per player.

    The player with the smallest channel-time share gets one basic slot of
    ``t_slot`` seconds; everyone else scales proportionally.  Each whole slot
    splits into the upload leg (fraction beta/(1+beta)) and the broadcast
    leg.  Zero allocations must be dropped by the caller first.
    """
    if not (t_slot > 0):
        raise ScheduleError("t_slot must be > 0")
    x = np.asarray(allocation.broadcast_time, dtype=float)
    betas = np.asarray(betas, dtype=float)
    weighted = (1.0 + betas) * x
    if x.size == 0 or weighted.min() <= 0:
        raise ScheduleError("every scheduled player needs a positive allocation")
    whole = weighted / weighted.min() * t_slot
    upload = betas / (1.0 + betas) * whole
    broadcast = whole / (1.0 + betas)
    return whole, upload, broadcast


@dataclass(frozen=True)
class SlotEntry:
    node: str
    kind: str            # "upload" or "broadcast"
    start: float
    duration: float

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True, eq=False)
class Schedule:
    """Contiguous slot entries covering (part of) an allocation interval."""

    entries: tuple[SlotEntry, ...]
    cycle_length: float
    t_start: float

    @property
    def end(self) -> float:
        return self.entries[-1].end if self.entries else self.t_start


def default_cycle_order(ids: Iterable[str], go_id: str) -> list[str]:
    """Clients in ascending id order, GO last."""
    ids = list(ids)
    return sorted(i for i in ids if i != go_id) + ([go_id] if go_id in ids else [])


def build_schedule(slots: Mapping[str, tuple[float, float]], interval: float,
                   order: Sequence[str], t_start: float = 0.0) -> Schedule:
    """Repeat the slot cycle in ``order`` from ``t_start`` until the interval
    ends, truncating the final cycle mid-slot.

    ``slots`` maps node id to (upload seconds, broadcast seconds) per cycle;
    a zero upload leg emits no upload slot.  Raises :class:`ScheduleError`
    when a single cycle does not fit the interval.
    """
    if not (interval > 0):
        raise ScheduleError("interval must be > 0")
    pattern: list[tuple[str, str, float]] = []
    for node in order:
        up, down = slots[node]
        if up < 0 or down <= 0:
            raise ScheduleError(f"invalid slot sizes for {node!r}")
        if up > 0:
            pattern.append((node, "upload", up))
        pattern.append((node, "broadcast", down))
    cycle = sum(d for _, _, d in pattern)
    if cycle > interval:
        raise ScheduleError(f"one cycle ({cycle:.6f}s) exceeds the interval ({interval:.6f}s)")

    end = t_start + interval
    entries: list[SlotEntry] = []
    t = t_start
    while True:
        for node, kind, dur in pattern:
            if t >= end - 1e-12:
                break
            take = min(dur, end - t)
            entries.append(SlotEntry(node, kind, t, take))
            t += take
            if take < dur:
                break
        else:
            continue
        break
    return Schedule(tuple(entries), cycle, t_start)


def schedule_csv_rows(schedule: Schedule) -> list[str]:
    """Serialize a schedule as CSV lines (header first, 6-decimal fields)."""
    rows = ["node_id,kind,start_s,duration_s"]
    for e in schedule.entries:
        rows.append(f"{e.node},{e.kind},{e.start:.6f},{e.duration:.6f}")
    return rows
