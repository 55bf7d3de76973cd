"""End-to-end acceptance gate.

Runs every reproduction scenario once, printing one

    [acceptance] NN scenario_name PASS|FAIL

line per criterion, and finishes by rerunning the whole table to demand
byte-identical reports.  Reports are cached so each scenario executes at
most twice per session.
"""

import json

import pytest

from photonclust import scenarios

_CACHE = {}


def _run(name):
    if name not in _CACHE:
        _CACHE[name] = scenarios.run(name)
    return _CACHE[name]


def _announce(capsys, report, failed):
    verdict = "PASS" if not failed else "FAIL"
    with capsys.disabled():
        print(f"\n[acceptance] {report['criterion']:02d} {report['scenario']} {verdict}")


_ORDERED = [name for name in scenarios.SCENARIOS if name != "determinism"]


@pytest.mark.parametrize("name", _ORDERED)
def test_criterion(name, capsys):
    report = _run(name)
    failed = scenarios.failures(report)
    _announce(capsys, report, failed)
    assert not failed, f"{name}: failing checks {failed}: {report['checks']}"


def test_criterion_determinism(capsys):
    report = _run("determinism")
    failed = scenarios.failures(report)

    # rerun the full table: identical seeds and workers must reproduce
    # every report byte for byte
    mismatched = []
    for name in _ORDERED:
        first = json.dumps(_run(name), sort_keys=True)
        again = json.dumps(scenarios.run(name), sort_keys=True)
        if first != again:
            mismatched.append(name)

    _announce(capsys, report, failed or mismatched)
    assert not failed, f"determinism: failing checks {failed}"
    assert not mismatched, f"reports changed on rerun: {mismatched}"
