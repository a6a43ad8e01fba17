"""Measurement pipeline: target derivation, DNS scanning, snapshot storage."""

from .scan import ScanConfig, scan_domain, scan_list, tls_probe  # noqa: F401
from .store import SnapshotStore  # noqa: F401
from .targets import PublicSuffixList, derive_targets  # noqa: F401
from .transport import (  # noqa: F401
    DnsAnswer,
    DnsResponse,
    MockTransport,
    TransportError,
    TransportTimeout,
    UdpTransport,
)
