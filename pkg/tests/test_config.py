import json
import os

import pytest

from config import ConfigError, ConfigManager

def test_singleton(isolated_config):
    assert ConfigManager() is isolated_config

def test_first_run_writes_defaults(isolated_config, tmp_path):
    path = tmp_path / 'efx_config.json'
    assert path.exists()
    data = json.loads(path.read_text())
    assert data['service_name'] == 'efx-allocator'
    assert data['require_api_key'] is True
    assert len(data['api_key']) >= 32
    assert isolated_config.get_api_key() == data['api_key']

def test_set_persists(isolated_config, tmp_path):
    isolated_config.set('fuzz_workers', 2)
    assert json.loads((tmp_path / 'efx_config.json').read_text())['fuzz_workers'] == 2
    isolated_config.reload()
    assert isolated_config.get_int('fuzz_workers') == 2

def test_env_overrides(isolated_config, monkeypatch, tmp_path):
    assert isolated_config.get_crash_dir() == str(tmp_path / 'crashes')
    assert os.path.isdir(tmp_path / 'crashes')
    monkeypatch.setenv('EFX_API_KEY', 'from-env')
    assert isolated_config.get_api_key() == 'from-env'

def test_relative_dirs_resolve_next_to_config(isolated_config, tmp_path):
    assert isolated_config.get_trace_dir() == str(tmp_path / 'traces')
    assert isolated_config.get_paths()['config_file'] == str(tmp_path / 'efx_config.json')

def test_debug_flag(isolated_config, monkeypatch):
    assert not isolated_config.is_debug()
    monkeypatch.setenv('EFX_DEBUG', 'yes')
    assert isolated_config.is_debug()
    monkeypatch.setenv('EFX_DEBUG', '0')
    isolated_config.set('debug_checks', True)
    assert not isolated_config.is_debug()

def test_get_int_rejects_garbage(isolated_config):
    isolated_config.set('fuzz_workers', 'many')
    with pytest.raises(ConfigError):
        isolated_config.get_int('fuzz_workers')

def test_log_settings_without_telegram(isolated_config):
    settings = isolated_config.get_log_settings()
    assert settings['bot_token'] is None
    assert settings['chat_id'] is None

def test_malformed_config_file(isolated_config, tmp_path):
    (tmp_path / 'efx_config.json').write_text('{not json')
    with pytest.raises(ConfigError):
        isolated_config.reload()
    (tmp_path / 'efx_config.json').write_text('[]')
    with pytest.raises(ConfigError):
        isolated_config.reload()
    os.unlink(tmp_path / 'efx_config.json')
