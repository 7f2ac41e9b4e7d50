"""Verification reports: named checks, each keeping its first failing witness."""
from __future__ import annotations


class VerificationError(RuntimeError):
    def __init__(self, report: "Report"):
        self.report = report
        super().__init__(report.summary())


class Report:
    def __init__(self, title: str):
        self.title = title
        self._checks = {}

    def check(self, name: str, ok: bool, witness=None) -> bool:
        entry = self._checks.setdefault(name, {"pass": True, "cases": 0, "witness": None})
        entry["cases"] += 1
        if not ok and entry["pass"]:
            entry["pass"] = False
            entry["witness"] = witness() if callable(witness) else witness
        return bool(ok)

    def merge(self, other: "Report", prefix: str = "") -> "Report":
        for name, entry in other._checks.items():
            key = prefix + name
            mine = self._checks.setdefault(key, {"pass": True, "cases": 0, "witness": None})
            mine["cases"] += entry["cases"]
            if not entry["pass"] and mine["pass"]:
                mine["pass"] = False
                mine["witness"] = entry["witness"]
        return self

    @property
    def ok(self) -> bool:
        return all(e["pass"] for e in self._checks.values())

    def __bool__(self):
        return self.ok

    def __contains__(self, name):
        return name in self._checks

    def passed(self, name: str) -> bool:
        return self._checks[name]["pass"]

    def witness(self, name: str):
        return self._checks[name]["witness"]

    def names(self):
        return list(self._checks)

    def failures(self):
        return [n for n, e in self._checks.items() if not e["pass"]]

    def to_dict(self):
        return {
            "title": self.title,
            "ok": self.ok,
            "checks": [
                {"name": n, "pass": e["pass"], "cases": e["cases"], "witness": e["witness"]}
                for n, e in self._checks.items()
            ],
        }

    def summary(self) -> str:
        bad = self.failures()
        if not bad:
            return f"{self.title}: all {len(self._checks)} checks pass"
        return f"{self.title}: failed {', '.join(bad)}"

    def raise_if_failed(self):
        if not self.ok:
            raise VerificationError(self)
        return self

    def __repr__(self):
        return f"Report({self.summary()!r})"
