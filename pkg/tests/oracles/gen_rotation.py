"""Hourly ECH-rotation series with a planned, recorded ground truth.

The schedule generator doubles as the oracle: run lengths are written down
as the series is emitted, so the estimator can be checked against exactly
what was published.  Config payloads are assembled from the draft-13
length grammar with struct; nothing imports the package under test.

Defaults model a 7-day hourly collection (169 scans) where most keys live
two scans, a few live three, and a few are seen only once.
"""

import hashlib
import random
import struct

VERSION = 0xFE0D
X25519 = 0x0020


def _config(config_id, public_key, public_name="cover.rot.example"):
    name_raw = public_name.encode()
    contents = bytes([config_id])
    contents += struct.pack("!H", X25519)
    contents += struct.pack("!H", len(public_key)) + public_key
    suites = struct.pack("!HH", 0x0001, 0x0001)
    contents += struct.pack("!H", len(suites)) + suites
    contents += bytes([0, len(name_raw)]) + name_raw
    contents += struct.pack("!H", 0)
    return struct.pack("!HH", VERSION, len(contents)) + contents


def _config_list(entry):
    return struct.pack("!H", len(entry)) + entry


def _pick_lifetime(rng):
    roll = rng.random()
    if roll < 0.02:
        return 1
    if roll < 0.10:
        return 3
    return 2


def generate_rotation(seed=0xDECADE, n_domains=40, n_scans=169,
                      interval=3600.0, jitter=120.0):
    """Returns a list of per-domain dicts:

    domain        trailing-dot name
    timestamps    strictly increasing epoch seconds, hourly with jitter
    payloads      per scan: ECHConfigList bytes, or None for a no-ECH scan
    truth_runs    consecutive-scan count of each key, in emission order
    """
    rng = random.Random(seed)
    base = 1_750_000_000.0
    out = []
    for index in range(n_domains):
        domain = f"r{index:02d}.example."
        payloads = []
        truth_runs = []
        key_counter = 0
        while len(payloads) < n_scans:
            if rng.random() < 0.03:
                payloads.append(None)
                continue
            key_counter += 1
            seed_text = f"{seed}:{domain}:{key_counter}"
            key = hashlib.sha256(seed_text.encode()).digest()
            payload = _config_list(_config(key_counter % 256, key))
            lifetime = min(_pick_lifetime(rng), n_scans - len(payloads))
            payloads.extend([payload] * lifetime)
            truth_runs.append(lifetime)
        timestamps = [base + i * interval + rng.uniform(-jitter, jitter)
                      for i in range(n_scans)]
        out.append({
            "domain": domain,
            "timestamps": timestamps,
            "payloads": payloads,
            "truth_runs": truth_runs,
        })
    return out


if __name__ == "__main__":
    series = generate_rotation()
    total = sum(len(s["truth_runs"]) for s in series)
    print(f"{len(series)} domains, {total} planned key runs")
