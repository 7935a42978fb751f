"""
Configuration management
"""
import os
import sys
import json
import secrets
import tempfile
import threading
from typing import Any, Dict, Optional

from dotenv import load_dotenv

TRUTHY = {'1', 'true', 'yes', 'on'}

ENV_OVERRIDES = {
    'EFX_CRASH_DIR': 'crash_dir',
    'EFX_LOG_FILE': 'log_file',
    'EFX_LOG_BOT_TOKEN': 'log_bot_token',
    'EFX_LOG_CHAT_ID': 'log_chat_id',
    'EFX_API_KEY': 'api_key',
}

class ConfigError(Exception):
    """Unreadable config file or bad typed value"""
    pass

class ConfigManager:
    """Process-wide settings backed by efx_config.json"""

    _instance = None
    _lock = threading.Lock()

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if not hasattr(self, '_initialized'):
            self._initialized = False
            self._config = {}
            self._config_lock = threading.RLock()
            self._init_config()

    def _init_config(self):
        """Resolve paths, load dotenv and read the file"""
        load_dotenv()
        self.base_dir = os.path.dirname(os.path.abspath(__file__))
        self.config_file = os.environ.get('EFX_CONFIG') or os.path.join(self.base_dir, "efx_config.json")
        self.data_dir = os.path.dirname(os.path.abspath(self.config_file))

        with self._config_lock:
            self._config = self._load_or_create()
            self._initialized = True

    def _load_or_create(self) -> Dict:
        """Read the config file, writing defaults on first run"""
        if os.path.exists(self.config_file):
            try:
                with open(self.config_file, 'r') as f:
                    loaded = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"Cannot read config file {self.config_file}: {e}") from e
            if not isinstance(loaded, dict):
                raise ConfigError(f"Config file {self.config_file} must hold a JSON object")
            return {**self._defaults(loaded.get('api_key', '')), **loaded}

        api_key = secrets.token_urlsafe(32)
        config = self._defaults(api_key)
        os.makedirs(self.data_dir, exist_ok=True)
        self._write(config)

        print("\n" + "="*60, file=sys.stderr)
        print("🎯 FIRST TIME SETUP", file=sys.stderr)
        print("="*60, file=sys.stderr)
        print(f"\n🔑 API KEY: {api_key}", file=sys.stderr)
        print(f"\n📁 Config file: {self.config_file}", file=sys.stderr)
        print("\n⚠️  Add a log bot token and chat id to forward logs to Telegram\n", file=sys.stderr)

        return config

    @staticmethod
    def _defaults(api_key: str) -> Dict:
        return {
            "service_name": "efx-allocator",
            "environment": "production",
            "debug_checks": False,
            "fuzz_workers": 4,
            "crash_dir": "crashes",
            "trace_dir": "traces",
            "log_file": None,
            "log_bot_token": "",
            "log_chat_id": "",
            "api_key": api_key,
            "require_api_key": True
        }

    def reload(self):
        """Re-read the config file and the environment"""
        with self._config_lock:
            self._init_config()

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value, environment overrides first"""
        for env, name in ENV_OVERRIDES.items():
            if name == key and os.environ.get(env):
                return os.environ[env]
        with self._config_lock:
            return self._config.get(key, default)

    def get_int(self, key: str, default: int = 0) -> int:
        value = self.get(key, default)
        if isinstance(value, bool):
            raise ConfigError(f"'{key}' must be an integer, got {value!r}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"'{key}' must be an integer, got {value!r}") from None

    def set(self, key: str, value: Any):
        """Update one key and persist"""
        with self._config_lock:
            self._config[key] = value
            self._save()

    def _save(self):
        """Atomic write of the whole mapping"""
        with self._config_lock:
            self._write(self._config)

    def _write(self, data: Dict):
        fd, temp_path = tempfile.mkstemp(dir=self.data_dir, suffix='.tmp')
        try:
            with os.fdopen(fd, 'w') as f:
                json.dump(data, f, indent=2)
            os.replace(temp_path, self.config_file)
        except OSError as e:
            if os.path.exists(temp_path):
                os.unlink(temp_path)
            raise ConfigError(f"Cannot write config file {self.config_file}: {e}") from e

    def _resolve_dir(self, key: str) -> str:
        path = self.get(key) or key
        if not os.path.isabs(path):
            path = os.path.join(self.data_dir, path)
        os.makedirs(path, exist_ok=True)
        return path

    def get_api_key(self) -> str:
        """Get API key"""
        return self.get('api_key', '')

    def get_crash_dir(self) -> str:
        return self._resolve_dir('crash_dir')

    def get_trace_dir(self) -> str:
        return self._resolve_dir('trace_dir')

    def is_debug(self) -> bool:
        """EFX_DEBUG wins over the debug_checks key"""
        env = os.environ.get('EFX_DEBUG')
        if env is not None:
            return env.strip().lower() in TRUTHY
        return bool(self.get('debug_checks', False))

    def get_log_settings(self) -> Dict[str, Optional[str]]:
        return {
            'service_name': self.get('service_name', 'efx-allocator'),
            'log_file': self.get('log_file'),
            'bot_token': self.get('log_bot_token') or None,
            'chat_id': self.get('log_chat_id') or None
        }

    def get_paths(self) -> Dict:
        """Working directories, created on demand"""
        return {
            'base_dir': self.base_dir,
            'data_dir': self.data_dir,
            'crash_dir': self.get_crash_dir(),
            'trace_dir': self.get_trace_dir(),
            'config_file': self.config_file
        }

# Global config instance
config = ConfigManager()
