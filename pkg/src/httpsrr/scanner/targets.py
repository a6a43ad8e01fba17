"""Ranked-list ingestion: registrable-apex extraction and www pairing.

Input rows follow the common ranked-list download format, one
``rank,domain`` pair per line.  Apexes are derived with public-suffix rules
(normal, wildcard, and exception rules all supported); a small builtin rule
set covers the suffixes the test corpus uses, and a full rules file can be
loaded for real runs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .. import rr

# Enough of the public-suffix rule set for common zones; real scans should
# load the full published list via PublicSuffixList.from_file.
BUILTIN_RULES = """
com
net
org
edu
gov
mil
int
io
co
ai
app
dev
info
biz
xyz
uk
co.uk
org.uk
ac.uk
gov.uk
jp
co.jp
ne.jp
or.jp
au
com.au
net.au
org.au
de
fr
nl
it
es
se
ch
at
be
us
ca
cn
com.cn
net.cn
org.cn
br
com.br
net.br
ru
in
co.in
kr
co.kr
ck
*.ck
!www.ck
"""

_LABEL_RE = re.compile(r"^[a-z0-9_](?:[a-z0-9_-]*[a-z0-9_])?$")


class PublicSuffixList:
    """Longest-match public suffix rules with wildcard and exception support."""

    def __init__(self, rules: Iterable[str]):
        self.normal: set[str] = set()
        self.wildcard: set[str] = set()   # stored without the "*." prefix
        self.exception: set[str] = set()  # stored without the "!" prefix
        for raw in rules:
            line = raw.strip().lower()
            if not line or line.startswith("//"):
                continue
            if line.startswith("!"):
                self.exception.add(line[1:])
            elif line.startswith("*."):
                self.wildcard.add(line[2:])
            else:
                self.normal.add(line)

    @classmethod
    def builtin(cls) -> "PublicSuffixList":
        return cls(BUILTIN_RULES.splitlines())

    @classmethod
    def from_file(cls, path) -> "PublicSuffixList":
        with open(path, encoding="utf-8") as handle:
            return cls(handle)

    def public_suffix(self, domain: str) -> Optional[str]:
        """Matched public suffix of a bare lowercase domain, or None."""
        labels = domain.split(".")
        best: Optional[int] = None  # number of labels in the winning suffix
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            length = len(labels) - i
            if candidate in self.exception:
                # Exception rules shrink the suffix by their leading label.
                return ".".join(labels[i + 1:]) or None
            if candidate in self.normal and (best is None or length > best):
                best = length
            parent = ".".join(labels[i + 1:])
            if parent in self.wildcard and (best is None or length > best):
                best = length
        if best is None:
            # Per the published algorithm, an unmatched TLD acts as "*".
            best = 1
        return ".".join(labels[-best:])

    def registrable(self, domain: str) -> Optional[str]:
        """Registrable (apex) domain, or None when the input is a bare suffix."""
        try:
            bare = rr.normalize_name(domain).rstrip(".")
        except rr.RecordParseError:
            return None
        if not bare:
            return None
        labels = bare.split(".")
        if any(not _LABEL_RE.match(label) for label in labels):
            return None
        suffix = self.public_suffix(bare)
        if suffix is None:
            return None
        suffix_len = len(suffix.split("."))
        if len(labels) <= suffix_len:
            return None
        return ".".join(labels[-(suffix_len + 1):])


@dataclass
class TargetDerivation:
    apex: list[str] = field(default_factory=list)   # rank order, trailing dots
    www: list[str] = field(default_factory=list)
    skipped: int = 0


def derive_targets(rows: Iterable[str],
                   psl: Optional[PublicSuffixList] = None) -> TargetDerivation:
    """Turn ranked "rank,domain" rows into deduplicated apex and www lists.

    Duplicate apexes keep their best (lowest) rank; unparseable rows and
    bare public suffixes are skipped and counted.
    """
    psl = psl or PublicSuffixList.builtin()
    best_rank: dict[str, int] = {}
    skipped = 0
    for row in rows:
        line = row.strip()
        if not line:
            continue
        rank_text, _, domain = line.partition(",")
        domain = domain.strip()
        try:
            rank = int(rank_text.strip())
        except ValueError:
            skipped += 1
            continue
        if not domain:
            skipped += 1
            continue
        apex = psl.registrable(domain)
        if apex is None:
            skipped += 1
            continue
        name = apex + "."
        if name not in best_rank or rank < best_rank[name]:
            best_rank[name] = rank
    ordered = sorted(best_rank, key=lambda name: best_rank[name])
    return TargetDerivation(
        apex=ordered,
        www=["www." + name for name in ordered],
        skipped=skipped,
    )
