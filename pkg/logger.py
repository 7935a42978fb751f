"""
Structured run logger: per-service loggers feeding a queue-backed hub with console, JSONL and Telegram sinks
"""
import sys
import json
import threading
import traceback
from abc import ABC, abstractmethod
from datetime import datetime
from queue import Empty, Full, Queue
from typing import Callable, Dict, List, Optional

import requests
from dataclasses import dataclass

LEVEL_EMOJI = {
    'debug': '🔍', 'info': 'ℹ️', 'warning': '⚠️',
    'error': '❌', 'critical': '🔥'
}

@dataclass
class LogEntry:
    """One log record as it travels through the queue"""
    level: str
    message: str
    service: Optional[str] = None
    metadata: Optional[Dict] = None
    timestamp: datetime = None
    traceback: Optional[str] = None

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.now()

    def to_dict(self) -> Dict:
        return {
            'level': self.level,
            'service': self.service,
            'message': self.message,
            'metadata': self.metadata,
            'timestamp': self.timestamp.isoformat(),
            'traceback': self.traceback
        }

@dataclass
class LoggerConfig:
    """Enabled levels of one service"""
    service_name: str
    debug_enabled: bool = False
    info_enabled: bool = True
    warning_enabled: bool = True
    error_enabled: bool = True  # Always true
    critical_enabled: bool = True  # Always true

    def is_level_enabled(self, level: str) -> bool:
        level_map = {
            'debug': self.debug_enabled,
            'info': self.info_enabled,
            'warning': self.warning_enabled,
            'error': self.error_enabled,
            'critical': self.critical_enabled
        }
        return level_map.get(level, False)

    def to_dict(self) -> Dict:
        return {
            'service_name': self.service_name,
            'debug_enabled': self.debug_enabled,
            'info_enabled': self.info_enabled,
            'warning_enabled': self.warning_enabled,
            'error_enabled': self.error_enabled,
            'critical_enabled': self.critical_enabled
        }

# ========== SINKS ==========

class LogSink(ABC):
    """Destination for log entries; raising counts as a failed delivery"""

    @abstractmethod
    def emit(self, entry: LogEntry):
        pass

class ConsoleSink(LogSink):
    """One emoji-prefixed line per entry on stderr"""

    def __init__(self, stream=None):
        self.stream = stream

    def emit(self, entry: LogEntry):
        stream = self.stream or sys.stderr
        emoji = LEVEL_EMOJI.get(entry.level, '📝')
        line = f"{emoji} [{entry.service}] {entry.message}"
        if entry.metadata:
            line += f" {json.dumps(entry.metadata, default=str)}"
        print(line, file=stream)
        if entry.traceback:
            print(entry.traceback, file=stream)

class JsonlFileSink(LogSink):
    """Appends entries as JSON lines"""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()

    def emit(self, entry: LogEntry):
        with self._lock:
            with open(self.path, 'a') as f:
                f.write(json.dumps(entry.to_dict(), default=str) + '\n')

class TelegramSink(LogSink):
    """Forwards entries to a Telegram chat through the Bot API"""

    def __init__(self, bot_token: str, chat_id: str, service_name: str = "efx-allocator"):
        self.chat_id = chat_id
        self.default_service_name = service_name
        self.api_url = f"https://api.telegram.org/bot{bot_token}"
        self._session = requests.Session()

    def format(self, entry: LogEntry) -> str:
        emoji = LEVEL_EMOJI.get(entry.level, '📝')
        lines = [
            f"{emoji} *{entry.level.upper()}* - {entry.service or self.default_service_name}",
            f"📌 {entry.message}"
        ]
        if entry.metadata:
            meta_str = json.dumps(entry.metadata, indent=2, default=str)
            lines.append(f"📊 ```json\n{meta_str}\n```")
        if entry.traceback:
            lines.append(f"🔍 ```\n{entry.traceback[:1000]}\n```")
        lines.append(f"🕐 {entry.timestamp.strftime('%Y-%m-%d %H:%M:%S')}")
        return '\n'.join(lines)

    def emit(self, entry: LogEntry):
        response = self._session.post(
            f"{self.api_url}/sendMessage",
            json={
                'chat_id': self.chat_id,
                'text': self.format(entry),
                'parse_mode': 'Markdown'
            },
            timeout=5
        )
        if not response.ok:
            raise RuntimeError(f"Telegram rejected log entry: HTTP {response.status_code}")

class MemorySink(LogSink):
    """Keeps entries in memory"""

    def __init__(self):
        self.entries: List[LogEntry] = []

    def emit(self, entry: LogEntry):
        self.entries.append(entry)

    def messages(self, level: Optional[str] = None) -> List[str]:
        return [e.message for e in self.entries if level is None or e.level == level]

class CallbackSink(LogSink):
    def __init__(self, callback: Callable[[LogEntry], None]):
        self.callback = callback

    def emit(self, entry: LogEntry):
        self.callback(entry)

# ========== LOGGERS ==========

class RunLogger:
    """Logger handed to one component; filters by level before queueing"""

    def __init__(self, config: LoggerConfig, hub: 'LogHub'):
        self.config = config
        self.hub = hub

    def _log(self, level: str, message: str, metadata: Optional[Dict], exc_info: bool = False):
        if not self.config.is_level_enabled(level):
            return
        trace = traceback.format_exc() if exc_info else None
        self.hub.submit(LogEntry(level, message, self.config.service_name, metadata, traceback=trace))

    def debug(self, message: str, metadata: Dict = None):
        self._log('debug', message, metadata)

    def info(self, message: str, metadata: Dict = None):
        self._log('info', message, metadata)

    def warning(self, message: str, metadata: Dict = None):
        self._log('warning', message, metadata)

    def error(self, message: str, metadata: Dict = None, exc_info: bool = False):
        self._log('error', message, metadata, exc_info)

    def critical(self, message: str, metadata: Dict = None, exc_info: bool = False):
        self._log('critical', message, metadata, exc_info)

    def get_config(self) -> Dict:
        return self.config.to_dict()

class LogHub:
    """Queue-backed log delivery with a background worker"""

    def __init__(self, sinks: Optional[List[LogSink]] = None, service_name: str = "efx-allocator",
                 synchronous: bool = False, verbose: bool = False, debug: bool = False,
                 queue_size: int = 10000):
        self.sinks: List[LogSink] = list(sinks) if sinks is not None else [ConsoleSink()]
        self.default_service_name = service_name
        self.synchronous = synchronous
        self.verbose = verbose
        self.debug_enabled = debug
        self.log_queue: Queue = Queue(maxsize=queue_size)
        self.running = True
        self._lock = threading.RLock()
        self._stats = {'sent': 0, 'failed': 0, 'dropped': 0, 'queued': 0}
        self._loggers: Dict[str, RunLogger] = {}

        self._worker_thread = None
        if not synchronous:
            self._worker_thread = threading.Thread(target=self._worker, daemon=True)
            self._worker_thread.start()

    def _worker(self):
        """Drain the queue into every sink"""
        while self.running:
            try:
                entry = self.log_queue.get(timeout=1)
            except Empty:
                continue
            try:
                self._deliver(entry)
            finally:
                self.log_queue.task_done()

    def _deliver(self, entry: LogEntry):
        for sink in self.sinks:
            try:
                sink.emit(entry)
                with self._lock:
                    self._stats['sent'] += 1
            except Exception:
                with self._lock:
                    self._stats['failed'] += 1

    def submit(self, entry: LogEntry):
        with self._lock:
            self._stats['queued'] += 1
        if self.synchronous or not self.running:
            self._deliver(entry)
            return
        try:
            self.log_queue.put_nowait(entry)
        except Full:
            with self._lock:
                self._stats['dropped'] += 1

    def get_run_logger(self, service_name: Optional[str] = None) -> RunLogger:
        """Get or create the logger of a service"""
        service_name = service_name or self.default_service_name
        with self._lock:
            if service_name not in self._loggers:
                config = LoggerConfig(
                    service_name=service_name,
                    debug_enabled=self.debug_enabled,
                    info_enabled=self.verbose,
                    warning_enabled=True
                )
                self._loggers[service_name] = RunLogger(config, self)
            return self._loggers[service_name]

    def set_level(self, service_name: str, level: str, enabled: bool) -> Dict:
        """Enable/disable a level for a service; error and critical stay on"""
        logger = self.get_run_logger(service_name)
        level_attr = f"{level}_enabled"
        if hasattr(logger.config, level_attr) and level not in ['error', 'critical']:
            with self._lock:
                setattr(logger.config, level_attr, enabled)
        return logger.get_config()

    def list_services(self) -> Dict:
        with self._lock:
            return {name: logger.get_config() for name, logger in self._loggers.items()}

    def flush(self):
        """Block until queued entries are delivered"""
        if self._worker_thread is not None and self._worker_thread.is_alive():
            self.log_queue.join()

    def shutdown(self):
        self.flush()
        self.running = False
        if self._worker_thread is not None:
            self._worker_thread.join(timeout=2)

    def get_stats(self) -> Dict:
        with self._lock:
            return {
                **self._stats,
                'queue_size': self.log_queue.qsize(),
                'sinks': [type(s).__name__ for s in self.sinks],
                'services': list(self._loggers)
            }

# ========== MODULE HUB ==========

_hub: Optional[LogHub] = None
_hub_lock = threading.Lock()

def get_hub() -> LogHub:
    """The process-wide hub, created with a console sink on first use"""
    global _hub
    if _hub is None:
        with _hub_lock:
            if _hub is None:
                _hub = LogHub()
    return _hub

def set_hub(hub: LogHub) -> Optional[LogHub]:
    """Install a hub and return the previous one"""
    global _hub
    with _hub_lock:
        previous, _hub = _hub, hub
    return previous

def configure_logging(service_name: str = "efx-allocator", log_file: Optional[str] = None,
                      bot_token: Optional[str] = None, chat_id: Optional[str] = None,
                      verbose: bool = False, debug: bool = False, synchronous: bool = False) -> LogHub:
    """Build a hub from settings and install it process-wide"""
    sinks: List[LogSink] = [ConsoleSink()]
    if log_file:
        sinks.append(JsonlFileSink(log_file))
    if bot_token and chat_id:
        sinks.append(TelegramSink(bot_token, chat_id, service_name))
    hub = LogHub(sinks, service_name, synchronous=synchronous, verbose=verbose, debug=debug)
    previous = set_hub(hub)
    if previous is not None:
        previous.shutdown()
    return hub

def get_run_logger(service_name: Optional[str] = None) -> RunLogger:
    return get_hub().get_run_logger(service_name)
