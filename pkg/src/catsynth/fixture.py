"""Ground-truth survey-like network used as a stand-in for restricted microdata.

Topology: Gender -> Age -> Disability -> {InteractionFamily,
InteractionServices, InteractionHealthcare}. Cardinalities are 2, 3, 10, 5,
5, 5. The tables are hand-set so that

* the oldest age band is over-represented among developmental disabilities
  (prior P(65+) ~ 0.27, posterior given Developmental ~ 0.36), and
* Developmental shifts every interaction barrier toward Often/Always.
"""

from __future__ import annotations

from catsynth.bn_synth import SampleRequest, ancestral_sample
from catsynth.core import BayesNet, CategoricalSchema, Cpt, DataTable, Dag, VariableSpec

FREQUENCY = ("Never", "Rarely", "Sometimes", "Often", "Always")
AGE_BANDS = ("15-44", "45-64", "65+")
DISABILITIES = (
    "Seeing",
    "Hearing",
    "Mobility",
    "Flexibility",
    "Dexterity",
    "Pain",
    "Learning",
    "Developmental",
    "Mental health",
    "Memory",
)
INTERACTIONS = ("InteractionFamily", "InteractionServices", "InteractionHealthcare")

SCHEMA = CategoricalSchema(
    (
        VariableSpec("Gender", ("Male", "Female")),
        VariableSpec("Age", AGE_BANDS, "ordinal"),
        VariableSpec("Disability", DISABILITIES),
        *(VariableSpec(name, FREQUENCY, "ordinal") for name in INTERACTIONS),
    )
)

EDGES = (
    ("Gender", "Age"),
    ("Age", "Disability"),
    ("Disability", "InteractionFamily"),
    ("Disability", "InteractionServices"),
    ("Disability", "InteractionHealthcare"),
)

GENDER = [[0.455, 0.545]]

AGE_GIVEN_GENDER = [
    [0.33, 0.41, 0.26],
    [0.31, 0.42, 0.27],
]

DISABILITY_GIVEN_AGE = [
    # Seeing Hearing Mobility Flex Dext Pain Learn Devel Mental Memory
    [0.05, 0.04, 0.08, 0.08, 0.04, 0.20, 0.12, 0.05, 0.28, 0.06],
    [0.06, 0.06, 0.15, 0.15, 0.07, 0.27, 0.04, 0.03, 0.12, 0.05],
    [0.08, 0.12, 0.20, 0.16, 0.08, 0.21, 0.02, 0.06, 0.03, 0.04],
]

# Rows follow DISABILITIES; columns follow FREQUENCY.
FAMILY_GIVEN_DISABILITY = [
    [0.40, 0.25, 0.20, 0.10, 0.05],
    [0.30, 0.25, 0.25, 0.13, 0.07],
    [0.45, 0.25, 0.17, 0.09, 0.04],
    [0.45, 0.26, 0.17, 0.08, 0.04],
    [0.40, 0.26, 0.20, 0.09, 0.05],
    [0.42, 0.27, 0.19, 0.08, 0.04],
    [0.20, 0.22, 0.28, 0.18, 0.12],
    [0.06, 0.10, 0.24, 0.30, 0.30],
    [0.18, 0.20, 0.30, 0.20, 0.12],
    [0.15, 0.20, 0.30, 0.20, 0.15],
]

SERVICES_GIVEN_DISABILITY = [
    [0.30, 0.25, 0.25, 0.12, 0.08],
    [0.22, 0.23, 0.28, 0.17, 0.10],
    [0.38, 0.27, 0.20, 0.10, 0.05],
    [0.42, 0.27, 0.18, 0.09, 0.04],
    [0.36, 0.28, 0.21, 0.10, 0.05],
    [0.40, 0.27, 0.20, 0.09, 0.04],
    [0.20, 0.24, 0.28, 0.17, 0.11],
    [0.08, 0.12, 0.25, 0.28, 0.27],
    [0.16, 0.20, 0.30, 0.20, 0.14],
    [0.18, 0.22, 0.28, 0.19, 0.13],
]

HEALTHCARE_GIVEN_DISABILITY = [
    [0.34, 0.26, 0.22, 0.11, 0.07],
    [0.26, 0.24, 0.26, 0.15, 0.09],
    [0.36, 0.27, 0.21, 0.11, 0.05],
    [0.40, 0.27, 0.19, 0.09, 0.05],
    [0.38, 0.27, 0.20, 0.10, 0.05],
    [0.35, 0.27, 0.22, 0.11, 0.05],
    [0.24, 0.24, 0.26, 0.16, 0.10],
    [0.10, 0.14, 0.26, 0.26, 0.24],
    [0.17, 0.21, 0.29, 0.20, 0.13],
    [0.19, 0.22, 0.28, 0.18, 0.13],
]


def fixture_dag() -> Dag:
    return Dag.from_edges(SCHEMA.names, EDGES)


def fixture_model() -> BayesNet:
    tables = {
        "Gender": ((), GENDER),
        "Age": (("Gender",), AGE_GIVEN_GENDER),
        "Disability": (("Age",), DISABILITY_GIVEN_AGE),
        "InteractionFamily": (("Disability",), FAMILY_GIVEN_DISABILITY),
        "InteractionServices": (("Disability",), SERVICES_GIVEN_DISABILITY),
        "InteractionHealthcare": (("Disability",), HEALTHCARE_GIVEN_DISABILITY),
    }
    cpts = {
        node: Cpt(node, parents, [SCHEMA.cardinality(p) for p in parents], table)
        for node, (parents, table) in tables.items()
    }
    return BayesNet(SCHEMA, fixture_dag(), cpts)


def make_fixture(seed: int = 0, n_rows: int = 54_000, *, workers: int = 1) -> tuple[DataTable, BayesNet]:
    """Sample ``n_rows`` records from the ground-truth network."""
    model = fixture_model()
    return ancestral_sample(model, SampleRequest(n_rows, seed), workers=workers), model
