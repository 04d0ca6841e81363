"""
Replay transport for multi-process runs.

Frame: 1-byte message type, 4-byte big-endian payload length, payload.
Payload: an `.npz` archive of arrays plus a JSON `__meta__` entry, the same
container the checkpoints use, loaded with allow_pickle=False.

    INSERT_BATCH     actor_id + transition arrays       -> ACK(shard)
    SAMPLE_REQ       batch_size                         -> SAMPLE_RESP | ERROR
    PRIORITY_UPDATE  refs + |delta|                     -> ACK(applied)
    WEIGHTS          snapshot params (publish)          -> ACK
    WEIGHTS_REQ                                         -> WEIGHTS | ERROR
    AUDIT_REQ                                           -> AUDIT
"""

import io
import json
import socket
import socketserver
import struct
import threading
from dataclasses import asdict
from enum import IntEnum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from la_mdp.episodes import Transition
from la_tools import get_logger
from learner.qnetwork import NetworkShape
from replay.memory import InsufficientDataError, ReplayMemory, SampledBatch
from replay.shard import SampleRef
from runtime.weights import WeightBoard, WeightSnapshot

logger = get_logger("ReplayWire")

HEADER = struct.Struct("!BI")
MAX_FRAME_BYTES = 1 << 30


class MessageType(IntEnum):
    INSERT_BATCH = 1
    SAMPLE_REQ = 2
    SAMPLE_RESP = 3
    PRIORITY_UPDATE = 4
    WEIGHTS = 5
    WEIGHTS_REQ = 6
    AUDIT_REQ = 7
    AUDIT = 8
    ACK = 9
    ERROR = 10


class WireError(RuntimeError):
    pass


def encode_payload(meta: dict, arrays: Optional[Dict[str, np.ndarray]] = None) -> bytes:
    buffer = io.BytesIO()
    np.savez(buffer, __meta__=np.array(json.dumps(meta)), **(arrays or {}))
    return buffer.getvalue()


def decode_payload(payload: bytes) -> Tuple[dict, Dict[str, np.ndarray]]:
    with np.load(io.BytesIO(payload), allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        arrays = {k: data[k] for k in data.files if k != "__meta__"}
    return meta, arrays


def send_frame(sock: socket.socket, kind: MessageType, meta: dict, arrays: Optional[Dict[str, np.ndarray]] = None):
    payload = encode_payload(meta, arrays)
    sock.sendall(HEADER.pack(int(kind), len(payload)) + payload)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    while n > 0:
        chunk = sock.recv(min(n, 1 << 20))
        if not chunk:
            raise ConnectionError("connection closed mid-frame")
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


def recv_frame(sock: socket.socket) -> Optional[Tuple[MessageType, dict, Dict[str, np.ndarray]]]:
    """None when the peer closed the connection between frames"""
    first = sock.recv(1)
    if not first:
        return None
    header = first + _recv_exact(sock, HEADER.size - 1)
    kind, length = HEADER.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise WireError(f"frame of {length} bytes exceeds limit")
    meta, arrays = decode_payload(_recv_exact(sock, length))
    return MessageType(kind), meta, arrays


def transitions_to_arrays(batch: Sequence[Transition]) -> Dict[str, np.ndarray]:
    n_features = batch[0].state.shape[-1]
    return dict(
        states=np.stack([t.state for t in batch]),
        actions=np.array([t.action for t in batch], dtype=np.int64),
        rewards=np.array([t.reward for t in batch], dtype=float),
        next_states=np.stack([t.next_state if t.next_state is not None else np.zeros(n_features) for t in batch]),
        dones=np.array([t.done for t in batch], dtype=bool),
        priorities=np.array([np.nan if t.initial_priority is None else t.initial_priority for t in batch], dtype=float),
        actor_ids=np.array([t.actor_id for t in batch], dtype=np.int64),
        snapshot_ids=np.array([t.snapshot_id for t in batch], dtype=np.int64),
    )


def arrays_to_transitions(arrays: Dict[str, np.ndarray]) -> List[Transition]:
    out = []
    for i in range(len(arrays["actions"])):
        priority = float(arrays["priorities"][i])
        out.append(
            Transition(
                state=arrays["states"][i].copy(),
                action=int(arrays["actions"][i]),
                reward=float(arrays["rewards"][i]),
                next_state=arrays["next_states"][i].copy(),
                done=bool(arrays["dones"][i]),
                initial_priority=None if np.isnan(priority) else priority,
                actor_id=int(arrays["actor_ids"][i]),
                snapshot_id=int(arrays["snapshot_ids"][i]),
            )
        )
    return out


def _refs_to_arrays(refs: Sequence[SampleRef]) -> Dict[str, np.ndarray]:
    return dict(
        ref_shard=np.array([r.shard for r in refs], dtype=np.int64),
        ref_slot=np.array([r.slot for r in refs], dtype=np.int64),
        ref_generation=np.array([r.generation for r in refs], dtype=np.int64),
    )


def _arrays_to_refs(arrays: Dict[str, np.ndarray]) -> List[SampleRef]:
    return [SampleRef(int(s), int(i), int(g)) for s, i, g in zip(arrays["ref_shard"], arrays["ref_slot"], arrays["ref_generation"])]


class _ReplayHandler(socketserver.BaseRequestHandler):
    server: "ReplayServer"

    def handle(self):
        sock = self.request
        while True:
            try:
                frame = recv_frame(sock)
            except (ConnectionError, OSError, ValueError, WireError):
                return
            if frame is None:
                return
            kind, meta, arrays = frame
            try:
                self.server.dispatch(sock, kind, meta, arrays)
            except Exception as e:
                logger.error("REPLAY_REQUEST_FAILED", extra=dict(kind=kind.name, error=str(e)), exc_info=True)
                send_frame(sock, MessageType.ERROR, dict(error=str(e), kind=type(e).__name__))


class ReplayServer(socketserver.ThreadingTCPServer):
    """Serves one ReplayMemory (and the weight board) to remote actors and learners"""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, memory: ReplayMemory, board: Optional[WeightBoard] = None, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _ReplayHandler)
        self.memory = memory
        self.board = board or WeightBoard()
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> Tuple[str, int]:
        return self.server_address[0], self.server_address[1]

    def start(self) -> "ReplayServer":
        self._thread = threading.Thread(target=self.serve_forever, name="replay-server", daemon=True)
        self._thread.start()
        logger.info("REPLAY_SERVER_STARTED", extra=dict(host=self.address[0], port=self.address[1]))
        return self

    def stop(self):
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def dispatch(self, sock: socket.socket, kind: MessageType, meta: dict, arrays: Dict[str, np.ndarray]):
        if kind == MessageType.INSERT_BATCH:
            shard = self.memory.insert_batch(int(meta["actor_id"]), arrays_to_transitions(arrays))
            send_frame(sock, MessageType.ACK, dict(shard=shard))
        elif kind == MessageType.SAMPLE_REQ:
            try:
                sampled = self.memory.sample_batch(int(meta["batch_size"]), bool(meta.get("replacement", False)))
            except InsufficientDataError as e:
                send_frame(sock, MessageType.ERROR, dict(error=str(e), kind="InsufficientDataError"))
                return
            payload = transitions_to_arrays(sampled.transitions)
            payload.update(_refs_to_arrays(sampled.refs))
            payload.update(is_weights=sampled.is_weights, probabilities=sampled.probabilities)
            send_frame(sock, MessageType.SAMPLE_RESP, {}, payload)
        elif kind == MessageType.PRIORITY_UPDATE:
            applied = self.memory.update_priorities(_arrays_to_refs(arrays), arrays["priorities"])
            send_frame(sock, MessageType.ACK, dict(applied=applied))
        elif kind == MessageType.WEIGHTS:
            shape = NetworkShape(**meta["shape"])
            params = {k[len("param/") :]: v for k, v in arrays.items() if k.startswith("param/")}
            self.board.publish(WeightSnapshot(int(meta["snapshot_id"]), shape, params, int(meta.get("learner_step", 0))))
            send_frame(sock, MessageType.ACK, dict(snapshot_id=int(meta["snapshot_id"])))
        elif kind == MessageType.WEIGHTS_REQ:
            snapshot = self.board.latest()
            if snapshot is None:
                send_frame(sock, MessageType.ERROR, dict(error="no snapshot published", kind="LookupError"))
                return
            send_frame(sock, MessageType.WEIGHTS, _snapshot_meta(snapshot), {f"param/{k}": v for k, v in snapshot.params.items()})
        elif kind == MessageType.AUDIT_REQ:
            send_frame(sock, MessageType.AUDIT, dict(rows=self.memory.audit(), size=len(self.memory)))
        else:
            raise WireError(f"unexpected message type {kind.name}")


def _snapshot_meta(snapshot: WeightSnapshot) -> dict:
    return dict(snapshot_id=snapshot.snapshot_id, shape=asdict(snapshot.shape), learner_step=snapshot.learner_step)


class RemoteReplay:
    """Client with the ReplayMemory surface used by actors and the learner"""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.address = (host, port)
        self.sock = socket.create_connection(self.address, timeout=timeout)
        self._lock = threading.Lock()

    def close(self):
        self.sock.close()

    def _call(self, kind: MessageType, meta: dict, arrays: Optional[Dict[str, np.ndarray]] = None):
        with self._lock:
            send_frame(self.sock, kind, meta, arrays)
            frame = recv_frame(self.sock)
        if frame is None:
            raise ConnectionError("replay server closed the connection")
        reply, reply_meta, reply_arrays = frame
        if reply == MessageType.ERROR:
            if reply_meta.get("kind") == "InsufficientDataError":
                raise InsufficientDataError(reply_meta["error"])
            raise WireError(reply_meta.get("error", "remote error"))
        return reply, reply_meta, reply_arrays

    def __len__(self) -> int:
        return int(self._call(MessageType.AUDIT_REQ, {})[1]["size"])

    def insert_batch(self, actor_id: int, batch: Sequence[Transition]) -> int:
        if not batch:
            return -1
        return int(self._call(MessageType.INSERT_BATCH, dict(actor_id=actor_id), transitions_to_arrays(batch))[1]["shard"])

    def sample_batch(self, batch_size: int, replacement: bool = False) -> SampledBatch:
        _, _, arrays = self._call(MessageType.SAMPLE_REQ, dict(batch_size=batch_size, replacement=replacement))
        return SampledBatch(
            transitions=arrays_to_transitions(arrays),
            is_weights=arrays["is_weights"],
            refs=_arrays_to_refs(arrays),
            probabilities=arrays["probabilities"],
        )

    def update_priorities(self, refs: Sequence[SampleRef], new_priorities: Sequence[float]) -> int:
        payload = _refs_to_arrays(refs)
        payload["priorities"] = np.asarray(new_priorities, dtype=float)
        return int(self._call(MessageType.PRIORITY_UPDATE, {}, payload)[1]["applied"])

    def audit(self) -> List[dict]:
        return self._call(MessageType.AUDIT_REQ, {})[1]["rows"]

    def publish_weights(self, snapshot: WeightSnapshot):
        self._call(MessageType.WEIGHTS, _snapshot_meta(snapshot), {f"param/{k}": np.asarray(v) for k, v in snapshot.params.items()})

    def fetch_weights(self) -> WeightSnapshot:
        _, meta, arrays = self._call(MessageType.WEIGHTS_REQ, {})
        params = {k[len("param/") :]: v for k, v in arrays.items() if k.startswith("param/")}
        return WeightSnapshot(int(meta["snapshot_id"]), NetworkShape(**meta["shape"]), params, int(meta.get("learner_step", 0)))


class RemoteWeightBoard:
    """WeightBoard surface over a RemoteReplay connection"""

    def __init__(self, client: RemoteReplay):
        self.client = client
        self.adopted: Dict[int, int] = {}
        self._cached: Optional[WeightSnapshot] = None

    def publish(self, snapshot: WeightSnapshot):
        self.client.publish_weights(snapshot)
        self._cached = snapshot

    def latest(self) -> Optional[WeightSnapshot]:
        try:
            snapshot = self.client.fetch_weights()
        except WireError:
            return self._cached
        self._cached = snapshot
        return snapshot

    def report_adopted(self, actor_id: int, snapshot_id: int):
        self.adopted[actor_id] = snapshot_id

    def staleness(self) -> Dict[int, int]:
        latest = -1 if self._cached is None else self._cached.snapshot_id
        return {actor: latest - sid for actor, sid in self.adopted.items()}
