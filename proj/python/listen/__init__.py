"""Thin dict-level wrapper around the _listen extension module.

The extension exchanges JSON strings; these helpers convert to and from
plain Python objects.
"""

import json

import _listen

SchemaError = _listen.SchemaError
ConfigError = _listen.ConfigError
OracleFormatError = _listen.OracleFormatError


def load_dataset(path):
    return json.loads(_listen.load_dataset(str(path)))


def save_dataset(dataset, path):
    _listen.save_dataset(json.dumps(dataset), str(path))


def generate_dataset(spec):
    return json.loads(_listen.generate_dataset(json.dumps(spec)))


def evaluate(dataset, selected_id):
    return json.loads(_listen.evaluate(json.dumps(dataset), selected_id))


def concordance(dataset, samples=1000, seed=0, normalized_features=True):
    return json.loads(
        _listen.concordance(json.dumps(dataset), samples, seed, normalized_features)
    )


def fit_utility(dataset, pairs=10000, q=0.95, seed=0):
    return json.loads(_listen.fit_utility(json.dumps(dataset), pairs, q, seed))


def run(dataset, algorithm, iterations=25, batch_size=5, seed=0, noise=0.0,
        ablation_base_prompt=False):
    return json.loads(
        _listen.run(json.dumps(dataset), algorithm, iterations, batch_size, seed,
                    noise, ablation_base_prompt)
    )


def expected_random_nar(total_items, ranked_items):
    return _listen.expected_random_nar(total_items, ranked_items)
