import pytest

from api import create_app
from logger import get_run_logger
from repository import ArtifactRepository

API_KEY = 'test-key'

class StubConfig:
    def __init__(self, **values):
        self.values = {'service_name': 'efx-allocator', 'require_api_key': True, **values}

    def get(self, key, default=None):
        return self.values.get(key, default)

    def get_api_key(self):
        return API_KEY

    def is_debug(self):
        return False

@pytest.fixture
def client(tmp_path):
    app = create_app(StubConfig(), get_run_logger('api'), ArtifactRepository(str(tmp_path / 'crashes')))
    app.config['TESTING'] = True
    return app.test_client()

def post(client, url, body, key=API_KEY):
    headers = {'X-API-Key': key} if key else {}
    return client.post(url, json=body, headers=headers)

def test_health(client):
    response = client.get('/health')
    assert response.status_code == 200
    assert response.get_json()['status'] == 'healthy'

def test_api_key_required(client, example):
    assert post(client, '/api/allocate', {}, key=None).status_code == 401
    response = post(client, '/api/allocate', {}, key='wrong')
    assert response.status_code == 401
    assert response.get_json() == {'error': 'Invalid API key'}

def test_api_key_can_be_disabled(tmp_path, example):
    app = create_app(StubConfig(require_api_key=False), get_run_logger('api'),
                     ArtifactRepository(str(tmp_path / 'crashes')))
    response = app.test_client().post('/api/generate', json={'seed': 1})
    assert response.status_code == 200

def test_allocate(client, example):
    response = post(client, '/api/allocate', {'algorithm': 'three-values', 'instance': example.to_dict()})
    assert response.status_code == 200
    data = response.get_json()
    assert data['allocation'] == {'bundles': [[0], [1], [2, 3, 4, 5]]}
    assert data['certificate']['alpha'] == '50/31'
    assert data['case'] == 'case3'
    assert data['iterations'] == 4

def test_allocate_bad_requests(client, example):
    assert post(client, '/api/allocate', {'instance': example.to_dict()}).status_code == 400
    assert post(client, '/api/allocate', {'algorithm': 'multigraph', 'instance': example.to_dict()}).status_code == 400
    assert post(client, '/api/allocate', [1, 2]).status_code == 400
    response = post(client, '/api/allocate', {'algorithm': 'few-agents', 'instance': {'values': [["1"] * 9] * 8}})
    assert response.status_code == 400

def test_allocate_internal_failure_writes_crash(client, example, monkeypatch, tmp_path):
    import api
    from models import InternalInvariantError

    def broken(*args, **kwargs):
        raise InternalInvariantError("bound exceeded")
    monkeypatch.setattr(api, 'allocate', broken)
    response = post(client, '/api/allocate', {'algorithm': 'three-values', 'instance': example.to_dict()})
    assert response.status_code == 500
    assert response.get_json()['crash_dir'].startswith(str(tmp_path / 'crashes'))

def test_verify(client, example):
    body = {'instance': example.to_dict(), 'allocation': {'bundles': [[0], [1], [2, 3, 4, 5]]},
            'checks': ['efx', 'critical', 'propsF']}
    data = post(client, '/api/verify', body).get_json()
    assert data['passed'] is True
    assert data['report']['alpha'] == '50/31'

    body['alpha'] = '2'
    assert post(client, '/api/verify', body).get_json()['passed'] is False
    body['alpha'] = 'two'
    assert post(client, '/api/verify', body).status_code == 400
    body['alpha'] = '2/3'
    body['checks'] = 'efx'
    assert post(client, '/api/verify', body).status_code == 400

def test_oracle(client, example):
    body = {'instance': example.to_dict(), 'max_bundle_size': 2, 'complete': False, 'filter': 'efx23-nocritical'}
    assert post(client, '/api/oracle', body).get_json()['result'] == 'none exists'
    body['filter'] = 'bogus'
    assert post(client, '/api/oracle', body).status_code == 400
    body['filter'] = None
    body['max_bundle_size'] = -1
    assert post(client, '/api/oracle', body).status_code == 400

def test_generate(client):
    data = post(client, '/api/generate', {'seed': 9, 'family': 'multigraph', 'n': 3, 'm': 5}).get_json()
    assert data['kind'] == 'multigraph'
    assert len(data['edges']) == 5
    assert post(client, '/api/generate', {'seed': 9, 'n': 3, 'm': 2}).status_code == 400
