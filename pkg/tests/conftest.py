import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile('default', max_examples=60, deadline=None)
settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'default'))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES
    if LINES:
        terminalreporter.section('acceptance criteria')
        for line in sorted(LINES, key=lambda s: int(s.split('criterion')[1].split(':')[0])):
            terminalreporter.write_line(line)
