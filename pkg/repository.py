"""
Artifact repository: instances, allocations, traces, fuzz reports and crash artifacts on disk
"""
import os
import sys
import csv
import json
import tempfile
import threading
import traceback
from datetime import datetime
from typing import Any, Dict, Iterable, List, Optional, Sequence

from models import (
    AnyInstance, InputError, PartialAllocation, RunTrace, instance_from_dict
)
from verification import Certificate

class ArtifactRepository:
    """JSON, JSON-Lines and CSV persistence with atomic publication"""

    def __init__(self, crash_dir: str):
        self.crash_dir = crash_dir
        self._lock = threading.RLock()

    # ========== READS ==========

    @staticmethod
    def _read_json(path: str, what: str) -> Any:
        if not os.path.exists(path):
            raise InputError(f"{what} file not found: {path}")
        try:
            with open(path, 'r') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise InputError(f"malformed JSON in {what} file {path}: {e}") from e
        except OSError as e:
            raise InputError(f"cannot read {what} file {path}: {e}") from e

    def load_instance(self, path: str) -> AnyInstance:
        return instance_from_dict(self._read_json(path, 'instance'))

    def load_allocation(self, path: str, num_goods: int) -> PartialAllocation:
        return PartialAllocation.from_dict(self._read_json(path, 'allocation'), num_goods)

    # ========== WRITES ==========

    def _publish(self, path: str, write_body):
        """Write through a temp file in the target directory, then os.replace"""
        directory = os.path.dirname(os.path.abspath(path))
        with self._lock:
            os.makedirs(directory, exist_ok=True)
            fd, temp_path = tempfile.mkstemp(dir=directory, suffix='.tmp')
            try:
                with os.fdopen(fd, 'w', newline='') as f:
                    write_body(f)
                os.replace(temp_path, path)
            except BaseException:
                if os.path.exists(temp_path):
                    os.unlink(temp_path)
                raise
        return path

    def write_json(self, path: str, data: Any) -> str:
        return self._publish(path, lambda f: json.dump(data, f, indent=2))

    def save_instance(self, path: str, instance: AnyInstance) -> str:
        return self.write_json(path, instance.to_dict())

    def save_allocation(self, path: str, allocation: PartialAllocation,
                        certificate: Optional[Certificate] = None,
                        extra: Optional[Dict] = None) -> str:
        data = allocation.to_dict()
        if certificate is not None:
            data['certificate'] = certificate.to_dict()
        if extra:
            data.update(extra)
        return self.write_json(path, data)

    def write_trace(self, path: str, trace: RunTrace) -> str:
        def body(f):
            for event in trace.to_dicts():
                f.write(json.dumps(event, default=str) + '\n')
        return self._publish(path, body)

    def write_report(self, path: str, rows: Iterable[Dict], columns: Sequence[str]) -> str:
        def body(f):
            writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction='ignore')
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
        return self._publish(path, body)

    def write_crash(self, instance: Optional[AnyInstance], trace: Optional[RunTrace],
                    error: BaseException, context: Optional[Dict] = None) -> str:
        """Store everything needed to replay an internal-invariant failure"""
        stamp = datetime.now().strftime('%Y%m%d-%H%M%S-%f')
        label = (context or {}).get('seed', 'run')
        directory = os.path.join(self.crash_dir, f"crash-{stamp}-{label}")
        with self._lock:
            os.makedirs(directory, exist_ok=True)
            if instance is not None:
                self.write_json(os.path.join(directory, 'instance.json'), instance.to_dict())
            self.write_trace(os.path.join(directory, 'trace.jsonl'), trace or RunTrace())
            self.write_json(os.path.join(directory, 'error.json'), {
                'type': type(error).__name__,
                'message': str(error),
                'traceback': ''.join(traceback.format_exception(type(error), error, error.__traceback__)),
                'context': context or {}
            })
        print(f"💥 Crash artifact written to {directory}", file=sys.stderr)
        return directory

    def list_crashes(self) -> List[str]:
        with self._lock:
            if not os.path.isdir(self.crash_dir):
                return []
            return sorted(
                os.path.join(self.crash_dir, d) for d in os.listdir(self.crash_dir) if d.startswith('crash-'))
