"""Append-only snapshot storage: one JSONL file per scan date plus a manifest.

File layout under the store root:

    2026-05-10.jsonl            one snapshot per line
    2026-05-10.manifest.json    counts and the config digest for the run

Date keys are whatever string the scan used ("YYYY-MM-DD", or
"YYYY-MM-DDTHH" for sub-daily runs); the store treats them as opaque sort
keys.  Corrupt lines in a day file are skipped and counted rather than
aborting a read, so one bad write never poisons a whole day.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..snapshots import DomainSnapshot


class SnapshotStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def day_path(self, date: str) -> Path:
        return self.root / f"{date}.jsonl"

    def manifest_path(self, date: str) -> Path:
        return self.root / f"{date}.manifest.json"

    def append(self, snapshot: DomainSnapshot):
        with open(self.day_path(snapshot.date), "a", encoding="utf-8") as out:
            out.write(snapshot.to_json() + "\n")

    def read_day(self, date: str) -> tuple[list[DomainSnapshot], int]:
        """All snapshots for a date plus the count of skipped corrupt lines."""
        path = self.day_path(date)
        if not path.exists():
            return [], 0
        snapshots: list[DomainSnapshot] = []
        skipped = 0
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                try:
                    snapshots.append(DomainSnapshot.from_json(line))
                except (json.JSONDecodeError, KeyError, ValueError):
                    skipped += 1
        return snapshots, skipped

    def days(self) -> list[str]:
        return sorted(p.name[:-len(".jsonl")]
                      for p in self.root.glob("*.jsonl"))

    def iter_days(self):
        """Yield (date, snapshots) over all stored days in date order."""
        for date in self.days():
            snapshots, _skipped = self.read_day(date)
            yield date, snapshots

    def write_manifest(self, date: str, config, counts: dict):
        doc = {
            "date": date,
            "count": counts.get("scanned", 0),
            "errors": counts.get("errors", 0),
            "config_digest": config.digest(),
        }
        with open(self.manifest_path(date), "w", encoding="utf-8") as out:
            json.dump(doc, out, sort_keys=True, indent=2)
            out.write("\n")

    def read_manifest(self, date: str) -> dict:
        with open(self.manifest_path(date), encoding="utf-8") as handle:
            return json.load(handle)
