"""
Flask API routes: allocate, verify, oracle and generate over JSON
"""
import hmac
from functools import wraps
from datetime import datetime
from flask import Flask, request, jsonify, abort
from flask_cors import CORS

from allocators import allocate
from generators import GenSpec, generate
from models import (
    InputError, PartialAllocation, RunTrace, ThreeValueInstance, instance_from_dict
)
from utils import parse_value
from verification import ORACLE_FILTERS, brute_force_best_alpha, verify_allocation

def _body() -> dict:
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise InputError("request body must be a JSON object")
    return data

def _parse_alpha(raw) -> object:
    try:
        return parse_value(raw)
    except ValueError as e:
        raise InputError(f"invalid alpha: {e}") from None

def create_app(config, logger, repository):
    """Create Flask app with all routes"""

    app = Flask(__name__)
    CORS(app)

    # ========== AUTHENTICATION ==========
    def require_api_key(f):
        @wraps(f)
        def decorated(*args, **kwargs):
            if not config.get('require_api_key', True):
                return f(*args, **kwargs)
            api_key = request.headers.get('X-API-Key')
            valid_key = config.get_api_key()

            if not api_key or not valid_key or not hmac.compare_digest(api_key, valid_key):
                logger.warning("Invalid API key attempt", metadata={'ip': request.remote_addr})
                abort(401, "Invalid API key")

            return f(*args, **kwargs)
        return decorated

    @app.errorhandler(401)
    def unauthorized(e):
        return jsonify({'error': 'Invalid API key'}), 401

    def internal_failure(e: Exception, instance=None, trace=None, context=None):
        logger.error(f"Internal failure: {e}", metadata=context, exc_info=True)
        crash_dir = repository.write_crash(instance, trace, e, context)
        return jsonify({'error': str(e), 'crash_dir': crash_dir}), 500

    # ========== ALLOCATION ENDPOINTS ==========

    @app.route('/api/allocate', methods=['POST'])
    @require_api_key
    def allocate_instance():
        """Run an allocator and return the allocation with its certificate"""
        instance, trace, context = None, RunTrace(), {'endpoint': 'allocate'}
        try:
            data = _body()
            algorithm = data.get('algorithm')
            if not algorithm:
                raise InputError("'algorithm' required")
            context['algorithm'] = algorithm
            instance = instance_from_dict(data.get('instance'))
            debug = bool(data.get('debug', config.is_debug()))
            result = allocate(algorithm, instance, debug=debug, logger=logger, trace=trace)
        except InputError as e:
            logger.warning(f"Allocate rejected: {e}")
            return jsonify({'error': str(e)}), 400
        except Exception as e:
            return internal_failure(e, instance, trace, context)

        if not result.passed:
            error = AssertionError(f"certificate failed: alpha {result.certificate.alpha.to_dict()['alpha']}")
            return internal_failure(error, instance, trace, context)

        logger.info(f"Allocated with {algorithm}", {'iterations': result.iterations})
        return jsonify({
            'allocation': result.allocation.to_dict(),
            'certificate': result.certificate.to_dict(),
            'iterations': result.iterations,
            'algorithm': result.algorithm,
            'case': result.case.value if result.case else None
        }), 200

    @app.route('/api/verify', methods=['POST'])
    @require_api_key
    def verify():
        """Check an allocation against the requested properties"""
        try:
            data = _body()
            source = instance_from_dict(data.get('instance'))
            inst = source.to_instance()
            alloc = PartialAllocation.from_dict(data.get('allocation'), inst.num_goods)
            alpha = _parse_alpha(data.get('alpha', '2/3'))
            checks = data.get('checks') or ['efx']
            if not isinstance(checks, list):
                raise InputError("'checks' must be a list")
            params = source.params if isinstance(source, ThreeValueInstance) else None
            report = verify_allocation(inst, alloc, alpha, checks, params)
        except InputError as e:
            return jsonify({'error': str(e)}), 400
        except Exception as e:
            return internal_failure(e, context={'endpoint': 'verify'})

        return jsonify({'passed': report.passed, 'report': report.to_dict()}), 200

    @app.route('/api/oracle', methods=['POST'])
    @require_api_key
    def oracle():
        """Brute-force best alpha for a small instance"""
        try:
            data = _body()
            inst = instance_from_dict(data.get('instance')).to_instance()
            max_size = data.get('max_bundle_size')
            if max_size is not None and (isinstance(max_size, bool) or not isinstance(max_size, int) or max_size < 0):
                raise InputError("'max_bundle_size' must be a non-negative integer")
            name = data.get('filter')
            if name is not None and name not in ORACLE_FILTERS:
                raise InputError(f"unknown filter '{name}', expected one of {sorted(ORACLE_FILTERS)}")
            filters = [ORACLE_FILTERS[name]] if name else []
            result = brute_force_best_alpha(inst, max_size, bool(data.get('complete', True)), filters)
        except InputError as e:
            return jsonify({'error': str(e)}), 400
        except Exception as e:
            return internal_failure(e, context={'endpoint': 'oracle'})

        return jsonify(result.to_dict()), 200

    @app.route('/api/generate', methods=['POST'])
    @require_api_key
    def generate_instance():
        """Generate a seeded instance"""
        try:
            instance = generate(GenSpec.from_dict(_body()))
        except InputError as e:
            return jsonify({'error': str(e)}), 400
        return jsonify(instance.to_dict()), 200

    # ========== HEALTH CHECK ==========

    @app.route('/health')
    def health():
        """Health check endpoint"""
        return jsonify({
            'status': 'healthy',
            'service': config.get('service_name'),
            'timestamp': datetime.now().isoformat()
        }), 200

    return app

def create_wsgi_app():
    """Entry point for gunicorn: api:create_wsgi_app()"""
    from config import config
    from logger import configure_logging
    from repository import ArtifactRepository

    settings = config.get_log_settings()
    hub = configure_logging(settings['service_name'], settings['log_file'],
                            settings['bot_token'], settings['chat_id'], verbose=True)
    return create_app(config, hub.get_run_logger('api'), ArtifactRepository(config.get_crash_dir()))
