"""Toolkit for the DNS HTTPS/SVCB record ecosystem.

Modules:

- ``rr``: record codec (presentation and wire form) and validation
- ``ech``: ECHConfigList parsing and key identities
- ``resolution``: policy profiles and connection-plan state machine
- ``simnet``: deterministic in-memory network and scenario runner
- ``matrix``: builtin browser-behavior scenario matrix
- ``snapshots``: per-domain scan result model and serialization
- ``scanner``: DNS measurement pipeline (transport, targets, scan, store)
- ``analysis``: metrics over snapshot streams
- ``cli``: command-line entry point
"""

__version__ = "0.1.0"
