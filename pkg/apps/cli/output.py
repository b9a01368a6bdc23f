"""
Artifacts of a run: CSV for bulk numerics, JSON for scalar results and
manifest.json recording how to reproduce them.
"""
import csv
import json
import logging
import math
import platform
from pathlib import Path

import django
import numpy as np
import rest_framework
import scipy
import yaml
from django.conf import settings

from .config import config_hash

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.json'


def out_dir(out, config, command):
    """--out when given, otherwise OUTPUT_DIR/<config name>/<command>."""
    path = Path(out) if out else Path(settings.MVLDP['OUTPUT_DIR']) / config.name / command
    path.mkdir(parents=True, exist_ok=True)
    return path


def jsonable(value):
    """numpy scalars/arrays to Python; non-finite floats to None."""
    if isinstance(value, dict):
        return {str(key): jsonable(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(val) for val in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        return jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, 'to_json'):
        return jsonable(value.to_json())
    return value


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(path, header, rows):
    path = Path(path)
    count = 0
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
            count += 1
    logger.info("wrote rows=%d file=%s", count, path)
    return path


def write_json(path, payload):
    path = Path(path)
    with open(path, 'w', newline='\n') as handle:
        json.dump(jsonable(payload), handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write('\n')
    return path


def versions():
    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'django': django.get_version(),
        'djangorestframework': rest_framework.VERSION,
        'pyyaml': yaml.__version__,
    }


def write_manifest(out, config, command, seed=None, outputs=()):
    """
    manifest.json: config hash, seed, package versions and the effective
    config. load_config accepts the file and reruns the same command input.
    """
    seed = config.seed if seed is None else seed
    payload = {
        'command': command,
        'config_sha256': config_hash(config.raw),
        'seed': seed,
        'versions': versions(),
        'outputs': sorted(Path(p).name for p in outputs),
        'config': config.raw,
    }
    path = write_json(Path(out) / MANIFEST, payload)
    logger.info("manifest written command=%s hash=%s", command, payload['config_sha256'][:12])
    return path
