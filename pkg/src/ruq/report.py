"""Verification reports shared by the hashing, one-shot and Slepian-Wolf labs."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

INEQUALITY_TOL = 1e-12
IDENTITY_TOL = 1e-10


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    PRECONDITION_FAILED = "PRECONDITION_FAILED"
    DEGENERATE = "DEGENERATE"
    ESTIMATE = "ESTIMATE"
    EXPLORATORY = "EXPLORATORY"


class Relation(str, enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "=="


def _fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return repr(float(v))


@dataclass(frozen=True)
class Check:
    """One inequality or identity ``lhs <rel> rhs`` evaluated on one instance."""

    check_id: str
    instance: str
    lhs: float
    rhs: float
    relation: Relation
    tolerance: float
    verdict: Verdict
    note: str = ""

    @property
    def slack(self) -> float:
        if self.relation is Relation.LE:
            return self.rhs - self.lhs
        if self.relation is Relation.GE:
            return self.lhs - self.rhs
        return -abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        return self.verdict in (Verdict.PASS, Verdict.DEGENERATE)

    def line(self) -> str:
        out = (
            f"CHECK {self.check_id} instance={self.instance} lhs={_fmt(self.lhs)} "
            f"rhs={_fmt(self.rhs)} slack={_fmt(self.slack)} verdict={self.verdict.value}"
        )
        return out + (f" note={self.note}" if self.note else "")


def evaluate(check_id: str, instance: str, lhs: float, rhs: float, relation: Relation | str,
             tolerance: float | None = None, note: str = "") -> Check:
    """Build a check and assign PASS/FAIL from the slack and tolerance."""
    relation = Relation(relation)
    if tolerance is None:
        tolerance = IDENTITY_TOL if relation is Relation.EQ else INEQUALITY_TOL
    probe = Check(check_id, instance, float(lhs), float(rhs), relation, tolerance, Verdict.PASS, note)
    slack = probe.slack
    if math.isnan(slack):
        # inf - inf: both sides diverge together
        both_inf = math.isinf(lhs) and math.isinf(rhs) and lhs == rhs
        verdict = Verdict.DEGENERATE if both_inf else Verdict.FAIL
    else:
        verdict = Verdict.PASS if slack >= -tolerance else Verdict.FAIL
    return Check(check_id, instance, float(lhs), float(rhs), relation, tolerance, verdict, note)


def marker(check_id: str, instance: str, verdict: Verdict, note: str = "",
           lhs: float = math.nan, rhs: float = math.nan) -> Check:
    """A check whose verdict is decided outside the slack rule."""
    return Check(check_id, instance, float(lhs), float(rhs), Relation.LE, 0.0, verdict, note)


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)
    flags: set[str] = field(default_factory=set)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport") -> None:
        self.checks.extend(other.checks)
        self.flags |= other.flags

    @property
    def passed(self) -> bool:
        """True when no check failed; estimates and degenerate cases do not fail."""
        return all(c.verdict is not Verdict.FAIL and c.verdict is not Verdict.PRECONDITION_FAILED
                   for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.verdict in (Verdict.FAIL, Verdict.PRECONDITION_FAILED)]

    @property
    def min_slack(self) -> float:
        slacks = [c.slack for c in self.checks if c.verdict in (Verdict.PASS, Verdict.FAIL)]
        return min(slacks) if slacks else math.inf

    def verdicts(self) -> list[Verdict]:
        return [c.verdict for c in self.checks]

    def to_text(self) -> str:
        lines = [c.line() for c in self.checks]
        if self.flags:
            lines.append("# flags: " + ",".join(sorted(self.flags)))
        return "\n".join(lines) + ("\n" if lines else "")

    def __len__(self) -> int:
        return len(self.checks)
