"""Record the golden protocol transcript fixture.

Plays a fixed 5-step client session against a live stub server and pins the
exact bytes of every server message (greeting + 4 responses + one ignored
line that must produce nothing).  Rerun only if the protocol changes:

    python3 tools/record_transcript.py
"""

import json
import socket
import threading
from pathlib import Path

from structfuzz_mutator import chunkfmt
from structfuzz_mutator.server import MutatorServer
from structfuzz_mutator.stub import stub_mutate


def sample_doc() -> bytes:
    return (
        chunkfmt.MAGIC
        + chunkfmt.build(b"HDRX", (2).to_bytes(4, "big") + (3).to_bytes(4, "big"))
        + chunkfmt.build(b"GAMA", (512).to_bytes(4, "big"))
        + chunkfmt.build(b"ENDX")
    )


CLIENT_LINES = [
    f"REQ 1 CHUNKFMT {sample_doc().hex()}\n",
    "REQ 2 CHUNKFMT zz\n",
    "not a request\n",
    "REQ 3 12\n",
    "REQ 4 JSON 7b7d\n",
]
EXPECT_REPLY = [True, True, False, True, True]


def read_line(sock_file) -> str:
    return sock_file.readline().decode("ascii")


def main():
    server = MutatorServer(stub_mutate, "127.0.0.1:0")
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.endpoint().rsplit(":", 1)
    conn = socket.create_connection((host, int(port)), timeout=2)
    fh = conn.makefile("rb")
    greeting = read_line(fh)
    steps = []
    for line, expect in zip(CLIENT_LINES, EXPECT_REPLY):
        conn.sendall(line.encode("ascii"))
        if expect:
            steps.append({"send": line, "recv": read_line(fh)})
        else:
            conn.settimeout(0.3)
            try:
                extra = conn.recv(1)
                raise SystemExit(f"expected silence, got {extra!r}")
            except socket.timeout:
                pass
            conn.settimeout(2)
            steps.append({"send": line, "recv": ""})
    conn.close()
    server.shutdown()
    out = Path(__file__).resolve().parent.parent / "tests" / "data"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "golden_transcript.json"
    path.write_text(json.dumps({"greeting": greeting, "steps": steps}, indent=1))
    print(f"wrote {path}")
    print(json.dumps({"greeting": greeting, "steps": steps}, indent=1))


if __name__ == "__main__":
    main()
