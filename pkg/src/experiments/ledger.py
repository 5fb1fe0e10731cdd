import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

CHECK = "check"
DISCREPANCY = "discrepancy"
MEASURED = "measured"


@dataclass
class LedgerEntry:
    name: str
    kind: str
    passed: Optional[bool]
    measured: Any = None
    expected: Any = None
    note: str = ""
    detail: Dict[str, Any] = field(default_factory=dict)


class CheckLedger:
    """
    Ordered record of identity checks, documented discrepancies and measured trends.
    Only entries of kind 'check' decide the exit status.
    """
    def __init__(self):
        self.entries: List[LedgerEntry] = []

    def add_check(self, name: str, passed: bool, measured=None, expected=None,
                  note: str = "", **detail) -> bool:
        passed = bool(passed)
        self.entries.append(LedgerEntry(name, CHECK, passed, measured, expected, note, detail))
        if passed:
            logging.info(f"[pass] {name}")
        else:
            logging.warning(f"[FAIL] {name}: measured={measured} expected={expected} {note}")
        return passed

    def add_discrepancy(self, name: str, measured, claimed, note: str = "", **detail) -> None:
        self.entries.append(LedgerEntry(name, DISCREPANCY, None, measured, claimed, note, detail))
        logging.info(f"[discrepancy] {name}: measured={measured} claimed={claimed}")

    def add_measured(self, name: str, measured, note: str = "", **detail) -> None:
        self.entries.append(LedgerEntry(name, MEASURED, None, measured, None, note, detail))
        logging.info(f"[measured] {name}: {measured}")

    def extend(self, other: "CheckLedger") -> None:
        self.entries.extend(other.entries)

    def get(self, name: str) -> LedgerEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    @property
    def failures(self) -> List[str]:
        return [e.name for e in self.entries if e.kind == CHECK and not e.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict:
        checks = [e for e in self.entries if e.kind == CHECK]
        return {
            "passed": self.passed,
            "summary": {"checks": len(checks), "failures": len(self.failures),
                        "discrepancies": sum(e.kind == DISCREPANCY for e in self.entries),
                        "measured": sum(e.kind == MEASURED for e in self.entries)},
            "entries": [asdict(e) for e in self.entries],
        }
