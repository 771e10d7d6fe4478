import os
from pathlib import Path

import numpy as np
import pytest

from clvstack import synthetic

FIG4_CSV = """Invoice,StockCode,Description,Quantity,InvoiceDate,Price,Customer ID,Country
489434,85048,15CM CHRISTMAS GLASS BALL 20 LIGHTS,12,01-12-2009 07:45,6.95,13085,United Kingdom
489434,79323P,PINK CHERRY LIGHTS,12,01-12-2009 07:45,6.75,13085,United Kingdom
489434,79323W,WHITE CHERRY LIGHTS,12,01-12-2009 07:45,6.75,13085,United Kingdom
489434,22041,"RECORD FRAME 7"" SINGLE SIZE ",48,01-12-2009 07:45,2.1,13085,United Kingdom
489434,21232,STRAWBERRY CERAMIC TRINKET BOX,24,01-12-2009 07:45,1.25,13085,United Kingdom
489434,22064,PINK DOUGHNUT TRINKET POT ,24,01-12-2009 07:45,1.65,13085,United Kingdom
489434,21871,SAVE THE PLANET MUG,24,01-12-2009 07:45,1.25,13085,United Kingdom
489434,21523,FANCY FONT HOME SWEET HOME DOORMAT,10,01-12-2009 07:45,5.95,13085,United Kingdom
489435,22350,CAT BOWL ,12,01-12-2009 07:46,2.55,13085,United Kingdom
489435,22349,"DOG BOWL , CHASING BALL DESIGN",12,01-12-2009 07:46,3.75,13085,United Kingdom
"""

DATASET_ENV = "CLVSTACK_ONLINE_RETAIL_CSV"


@pytest.fixture
def fig4_csv(tmp_path) -> Path:
    path = tmp_path / "fig4.csv"
    path.write_text(FIG4_CSV, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def synthetic_csv(tmp_path_factory) -> Path:
    return synthetic.write_csv(tmp_path_factory.mktemp("data") / "synthetic.csv", n_customers=300, seed=7)


@pytest.fixture(scope="session")
def online_retail_csv() -> Path:
    path = os.environ.get(DATASET_ENV)
    if not path or not Path(path).is_file():
        pytest.skip(f"BLOCKED: set {DATASET_ENV} to an Online Retail II CSV export to run this criterion")
    return Path(path)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# Acceptance summary: one line per criterion at the end of the run.
_AC_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_ac"):
        return
    label = "AC-" + str(int(name[7:9]))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "BLOCKED"}[report.outcome]
        if report.outcome == "skipped" and "BLOCKED" not in str(report.longrepr):
            status = "SKIPPED"
        _AC_RESULTS[label] = f"{status}  {name}"


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_AC_RESULTS, key=lambda s: int(s[3:])):
        terminalreporter.write_line(f"{label:<6} {_AC_RESULTS[label]}")
