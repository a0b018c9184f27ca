"""S3: the out-of-process server drives the fuzzer to the guarded bugs.

Talks to the fuzzer strictly from the outside: the installed structfuzz CLI,
seed files on disk, the wire protocol, and the crash records the campaign
leaves behind.
"""

import json
import shutil
import subprocess
import threading

import pytest

from structfuzz_mutator.server import MutatorServer
from structfuzz_mutator.stub import stub_mutate


def verdict(label, ok, detail=""):
    suffix = f" ({detail})" if detail else ""
    print(f"{label}: {'PASS' if ok else 'FAIL'}{suffix}")
    assert ok, f"{label}{suffix}"


def chunk(ctype: bytes, body: bytes = b"") -> bytes:
    ck = 0
    for b in body:
        ck ^= b
    return len(body).to_bytes(4, "big") + ctype + body + bytes([ck])


def doc(width: int, height: int, gammas, stride: int, total: int = 1980) -> bytes:
    out = b"FZ01" + chunk(
        b"HDRX", width.to_bytes(4, "big") + height.to_bytes(4, "big")
    )
    for g in gammas:
        out += chunk(b"GAMA", g.to_bytes(4, "big"))
    data_len = total - len(out) - 9 - 9
    out += chunk(b"DATA", bytes((i * stride) % 253 + 1 for i in range(data_len)))
    out += chunk(b"ENDX")
    assert len(out) == total
    return out


def write_seeds(d):
    specs = [
        (2, 3, [100000], 37),
        (3, 2, [120000, 120007], 41),
        (4, 5, [150000, 150007, 150009], 43),
        (5, 4, [180000, 180007, 180009, 180011], 47),
    ]
    for i, (w, h, gammas, stride) in enumerate(specs):
        (d / f"seed_{i}.bin").write_bytes(doc(w, h, gammas, stride))
    bad = bytearray(doc(2, 2, [77, 79, 81], 53))
    bad[4 + 17 + 12] ^= 0x01
    (d / "seed_bad.bin").write_bytes(bytes(bad))


@pytest.mark.skipif(
    shutil.which("structfuzz") is None, reason="structfuzz CLI not installed"
)
def test_s3_socket_advantage(tmp_path):
    seeds = tmp_path / "seeds"
    seeds.mkdir()
    write_seeds(seeds)

    server = MutatorServer(stub_mutate, "127.0.0.1:0")
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        hits = 0
        for rs in range(5):
            out = tmp_path / f"run_{rs}"
            proc = subprocess.run(
                [
                    "structfuzz", "fuzz",
                    "--target", "chunkfmt",
                    "--corpus", str(seeds),
                    "--out", str(out),
                    "--execs", "200000",
                    "--rng-seed", str(rs),
                    "--llm", "on",
                    "--endpoint", server.endpoint(),
                ],
                capture_output=True,
                text=True,
                timeout=120,
            )
            assert proc.returncode == 0, proc.stderr
            details = {
                json.loads(p.read_text())["detail"]
                for p in (out / "crashes").glob("sig_*.json")
            }
            if {"B1", "B2"} <= details:
                hits += 1
        verdict(
            "S3 socket end-to-end",
            hits >= 4 and server.connections >= 5 and server.requests > 0,
            f"B1+B2 in {hits}/5 runs over {server.connections} connections, "
            f"{server.requests} requests served",
        )
    finally:
        server.shutdown()
        thread.join(timeout=3)
