"""Privacy-preserving data toolkit.

Anonymization transforms with k-anonymity / l-diversity metrics, a
randomized-response reporting pipeline with exact differential-privacy
verification, a secret-sum multiparty protocol, and support/certainty rule
mining. See the README for the CLI.
"""

from .anonymize import (
    EquivalenceClass,
    GeneralizationRule,
    NoiseSpec,
    NumericBins,
    Partition,
    SuppressAll,
    TextPrefix,
    add_noise,
    aggregate_groups,
    equivalence_classes,
    generalize,
    k_anonymity,
    l_diversity,
    microaggregate_multivariate,
    microaggregate_univariate,
    rank_swap,
    suppress,
    swap_values,
)
from .assoc import Rule, TransactionSet, certainty, solid_rules, support
from .dataset import (
    SUPPRESSED,
    Attribute,
    AttributeRole,
    Dataset,
    Interval,
    Kind,
    MaskedText,
    Schema,
    fixture_table1,
    load_csv,
    write_csv,
)
from .dpcheck import (
    MechanismDistribution,
    exact_epsilon,
    prr_distribution,
    report_distribution,
)
from .errors import PrivkitError
from .rappor import (
    BloomFilter,
    PermanentResponse,
    RapporParams,
    Report,
    bloom_check,
    bloom_encode,
    epsilon_infinity,
    epsilon_one,
    estimate_counts,
    irr,
    lemma1,
    make_report,
    prr,
    simulate_reports,
)
from .smc import lagrange_at, run_secret_sum, secret_sum_transcript

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
