"""
Loading run documents: JSON or YAML files, dotted KEY=VALUE overrides,
manifest reruns, and validation through RunConfigSerializer.
"""
import copy
import hashlib
import json
import logging
from pathlib import Path

import yaml
from django.conf import settings

from .exceptions import ConfigError, ManifestMismatchError
from .serializers import RunConfigSerializer

logger = logging.getLogger(__name__)

YAML_SUFFIXES = ('.yaml', '.yml')


def canonical_json(document):
    return json.dumps(document, sort_keys=True, separators=(',', ':'), ensure_ascii=True)


def config_hash(document):
    return hashlib.sha256(canonical_json(document).encode('utf-8')).hexdigest()


def flatten_errors(detail, prefix=''):
    """Serializer error tree -> {json_pointer: [messages]}."""
    flat = {}

    def walk(node, pointer):
        if isinstance(node, dict):
            for key, value in node.items():
                if key == settings.REST_FRAMEWORK['NON_FIELD_ERRORS_KEY']:
                    walk(value, pointer)
                else:
                    walk(value, f'{pointer}/{key}')
        elif isinstance(node, list) and all(isinstance(item, str) for item in node):
            flat.setdefault(pointer, []).extend(str(item) for item in node)
        elif isinstance(node, list):
            for index, item in enumerate(node):
                if item:
                    walk(item, f'{pointer}/{index}')
        else:
            flat.setdefault(pointer, []).append(str(node))

    walk(detail, prefix)
    return flat


def _pointer(key):
    return '/' + key.replace('.', '/')


def apply_overrides(raw, overrides):
    """
    Patch a raw document with dotted KEY=VALUE pairs. VALUE is parsed as
    JSON when it parses, otherwise kept as a string; numeric path parts
    index into lists.
    """
    document = copy.deepcopy(raw)
    for item in overrides or ():
        key, sep, text = item.partition('=')
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not KEY=VALUE", {'': [f"bad override {item!r}"]})
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        parts = key.split('.')
        node = document
        for part in parts[:-1]:
            if isinstance(node, list):
                if not part.isdigit() or int(part) >= len(node):
                    raise ConfigError(f"override {key}: no list entry {part}", {_pointer(key): ["no such entry"]})
                node = node[int(part)]
            elif isinstance(node, dict):
                node = node.setdefault(part, {})
            else:
                raise ConfigError(f"override {key}: {part} is not a container", {_pointer(key): ["not a container"]})
        last = parts[-1]
        if isinstance(node, list):
            if not last.isdigit() or int(last) >= len(node):
                raise ConfigError(f"override {key}: no list entry {last}", {_pointer(key): ["no such entry"]})
            node[int(last)] = value
        elif isinstance(node, dict):
            node[last] = value
        else:
            raise ConfigError(f"override {key}: parent is not a container", {_pointer(key): ["not a container"]})
        logger.debug("override %s=%r", key, value)
    return document


def _resolve(path):
    path = Path(path)
    if path.exists():
        return path
    bundled = Path(settings.MVLDP['FIXTURES_DIR']) / path.name
    if bundled.exists():
        return bundled
    raise ConfigError(f"no such config file: {path}", {'': [f"no such config file: {path}"]})


def read_document(path):
    path = _resolve(path)
    text = path.read_text(encoding='utf-8')
    try:
        if path.suffix.lower() in YAML_SUFFIXES:
            document = yaml.safe_load(text)
        else:
            document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                          {'': [exc.msg]}) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}", {'': [str(exc)]}) from exc
    if is_manifest(document):
        computed = config_hash(document['config'])
        if computed != document['config_sha256']:
            raise ManifestMismatchError(document['config_sha256'], computed)
        logger.info("rerunning manifest command=%s hash=%s", document.get('command'), computed[:12])
        document = document['config']
    return document


def is_manifest(document):
    return isinstance(document, dict) and 'config_sha256' in document and 'config' in document


def validate_config(raw):
    serializer = RunConfigSerializer(data=raw)
    if not serializer.is_valid():
        raise ConfigError.from_errors(flatten_errors(serializer.errors))
    return serializer.save()


def load_config(path, overrides=(), seed=None):
    """Read, patch and validate a run document; returns a RunConfig."""
    raw = apply_overrides(read_document(path), overrides)
    if seed is not None:
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object", {'': ["Expected a dictionary."]})
        raw['seed'] = seed
    config = validate_config(raw)
    logger.info("config loaded name=%s n=%d m=%d hash=%s", config.name, config.spec.n, config.spec.m,
                config_hash(raw)[:12])
    return config
