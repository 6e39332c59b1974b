"""Best-known objective values with provenance, persisted as JSON."""

import json
import math
from dataclasses import dataclass, field


@dataclass
class BestKnownRegistry:
    """Minimisation registry: a value only ever moves down.

    Every accepted update is appended to the instance's history together with
    its provenance note.
    """

    entries: dict = field(default_factory=dict)

    def get(self, instance_id, default=None):
        e = self.entries.get(instance_id)
        return default if e is None else e["value"]

    def provenance(self, instance_id):
        return self.entries[instance_id]["provenance"]

    def history(self, instance_id):
        return list(self.entries.get(instance_id, {}).get("history", []))

    def __contains__(self, instance_id):
        return instance_id in self.entries

    def __len__(self):
        return len(self.entries)

    def update(self, instance_id, value, provenance):
        """Record ``value`` if it improves on the current entry; returns True if it did."""
        value = float(value)
        if math.isnan(value):
            raise ValueError("registry values must not be NaN")
        cur = self.entries.get(instance_id)
        if cur is not None and value >= cur["value"]:
            return False
        hist = [] if cur is None else cur["history"]
        hist.append({"value": value, "provenance": str(provenance)})
        self.entries[instance_id] = {"value": value, "provenance": str(provenance),
                                     "history": hist}
        return True

    def to_json(self):
        return json.dumps(self.entries, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        reg = cls()
        for k, e in data.items():
            if not {"value", "provenance"} <= set(e):
                raise ValueError(f"registry entry {k!r} lacks value or provenance")
            reg.entries[k] = {"value": float(e["value"]), "provenance": e["provenance"],
                              "history": list(e.get("history", []))}
        return reg

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_json(f.read())
