"""Multi-domain slicing model: domains, shareable resources, interdomain links.

The types here describe *what* is being sliced; the mapping onto gateway
queues is derived from each domain's resource constraint classes via
:func:`build_gateway_plan`.  Validation never raises on bad model data:
violations are returned as values so a caller can report all of them.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence


class ResourceKind(str, Enum):
    INFRASTRUCTURE_SERVICE = "infrastructure-service"
    COMMUNICATION = "communication"


@dataclass(frozen=True)
class Resource:
    """One shareable resource hosted by a domain.

    ``constraint_class`` names the performance-constraint class of the
    traffic this resource generates; resources sharing a class share one
    gateway queue.
    """

    id: str
    kind: ResourceKind
    constraint_class: int


@dataclass(frozen=True)
class Domain:
    id: str
    location: str
    resources: tuple[Resource, ...]


@dataclass(frozen=True)
class SliceParams:
    """Bandwidth / loss / delay triple characterizing a communication slice.

    ``delay`` may be ``None`` when a measurement window had no departures,
    i.e. the delay estimate is undefined.
    """

    bandwidth: float
    loss: float
    delay: float | None


@dataclass(frozen=True)
class CommunicationSlice:
    """The single interdomain link between a pair of domains."""

    endpoints: tuple[str, str]
    params: SliceParams

    def pair_key(self) -> tuple[str, str]:
        a, b = self.endpoints
        return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class SlicedVirtualNetwork:
    id: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class Violation:
    """A single broken model invariant; ``code`` is a stable machine label."""

    code: str
    subject: str
    detail: str


@dataclass(frozen=True)
class GatewayPlan:
    """Ordered (constraint_class, queue index) assignment for one domain."""

    entries: tuple[tuple[int, int], ...]

    @property
    def queue_count(self) -> int:
        return len(self.entries)


def validate_model(
    domains: Sequence[Domain],
    slices: Sequence[CommunicationSlice],
    svns: Sequence[SlicedVirtualNetwork],
) -> list[Violation]:
    """Check every model invariant; returns a canonically sorted violation list.

    An empty list means the model is valid.  The result is insensitive to
    the ordering of the input sequences.
    """
    found: list[Violation] = []

    domain_ids = Counter(d.id for d in domains)
    for did, n in sorted(domain_ids.items()):
        if n > 1:
            found.append(Violation("duplicate domain id", did, f"domain id {did!r} appears {n} times"))

    resource_ids = Counter(r.id for d in domains for r in d.resources)
    for rid, n in sorted(resource_ids.items()):
        if n > 1:
            found.append(Violation("duplicate resource id", rid, f"resource id {rid!r} appears {n} times"))

    for d in domains:
        for r in d.resources:
            if r.constraint_class < 0:
                found.append(
                    Violation("invalid constraint class", r.id, f"resource {r.id!r} has constraint_class {r.constraint_class}")
                )

    pair_counts = Counter(s.pair_key() for s in slices)
    for s in slices:
        a, b = s.endpoints
        if a == b:
            found.append(Violation("self loop", a, f"communication slice joins domain {a!r} to itself"))
            continue
        for end in s.endpoints:
            if end not in domain_ids:
                found.append(Violation("unknown endpoint", end, f"communication slice endpoint {end!r} is not a domain"))
        if not _params_valid(s.params):
            found.append(
                Violation("invalid slice params", f"{a}~{b}", f"slice ({a!r}, {b!r}) has out-of-range params")
            )
    for (a, b), n in sorted(pair_counts.items()):
        if a != b and n > 1:
            found.append(
                Violation("duplicate interdomain link", f"{a}~{b}", f"{n} communication slices join domains {a!r} and {b!r}")
            )

    svn_ids = Counter(v.id for v in svns)
    for vid, n in sorted(svn_ids.items()):
        if n > 1:
            found.append(Violation("duplicate svn id", vid, f"svn id {vid!r} appears {n} times"))
    for v in svns:
        for member in v.members:
            if member not in resource_ids:
                found.append(
                    Violation("unresolved member", member, f"svn {v.id!r} references unknown resource {member!r}")
                )

    found.sort(key=lambda x: (x.code, x.subject, x.detail))
    return found


def _params_valid(p: SliceParams) -> bool:
    if p.bandwidth < 0 or not 0 <= p.loss <= 1:
        return False
    return p.delay is None or p.delay >= 0


def build_gateway_plan(domain: Domain) -> GatewayPlan:
    """One queue per distinct constraint class, indexed in ascending class order."""
    if not domain.resources:
        raise ValueError(f"nothing to slice: domain {domain.id!r} has no resources")
    classes = sorted({r.constraint_class for r in domain.resources})
    return GatewayPlan(tuple((cls, idx) for idx, cls in enumerate(classes)))


# --- JSON serialization ------------------------------------------------
#
# Document shape: {"domains": [...], "communication_slices": [...], "svns": [...]}
# with field names matching the dataclass fields exactly.


def model_to_json(
    domains: Sequence[Domain],
    slices: Sequence[CommunicationSlice],
    svns: Sequence[SlicedVirtualNetwork],
) -> str:
    doc = {
        "domains": [
            {
                "id": d.id,
                "location": d.location,
                "resources": [
                    {"id": r.id, "kind": r.kind.value, "constraint_class": r.constraint_class}
                    for r in d.resources
                ],
            }
            for d in domains
        ],
        "communication_slices": [
            {
                "endpoints": list(s.endpoints),
                "params": {"bandwidth": s.params.bandwidth, "loss": s.params.loss, "delay": s.params.delay},
            }
            for s in slices
        ],
        "svns": [{"id": v.id, "members": list(v.members)} for v in svns],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def model_from_json(
    text: str,
) -> tuple[list[Domain], list[CommunicationSlice], list[SlicedVirtualNetwork]]:
    doc = json.loads(text)
    domains = [
        Domain(
            id=d["id"],
            location=d["location"],
            resources=tuple(
                Resource(id=r["id"], kind=ResourceKind(r["kind"]), constraint_class=int(r["constraint_class"]))
                for r in d.get("resources", [])
            ),
        )
        for d in doc.get("domains", [])
    ]
    slices = [
        CommunicationSlice(
            endpoints=(s["endpoints"][0], s["endpoints"][1]),
            params=SliceParams(
                bandwidth=float(s["params"]["bandwidth"]),
                loss=float(s["params"]["loss"]),
                delay=None if s["params"]["delay"] is None else float(s["params"]["delay"]),
            ),
        )
        for s in doc.get("communication_slices", [])
    ]
    svns = [
        SlicedVirtualNetwork(id=v["id"], members=tuple(v.get("members", [])))
        for v in doc.get("svns", [])
    ]
    return domains, slices, svns


def resources_of_kind(domains: Iterable[Domain], kind: ResourceKind) -> list[Resource]:
    return [r for d in domains for r in d.resources if r.kind is kind]
