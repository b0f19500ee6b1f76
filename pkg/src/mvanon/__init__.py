"""Multi-view prefix-preserving anonymization of network flow traces.

A data owner anonymizes a trace with a prefix-preserving cipher, then
publishes one seed trace plus key vectors from which an analyst unrolls N
plausible views; only the owner knows which view is real, and an adversary
who knows flows in alpha prefix groups can only narrow the field to about
e^-eps * N candidates.
"""

from .adversary import (
    AdversaryKnowledge,
    LeakageReport,
    baseline_views,
    build_knowledge,
    eliminate_fakes,
    extrapolate,
    ip_distribution,
    leakage,
    locate_known,
    packet_len_ecdf,
)
from .errors import (
    DomainError,
    IterationLimitError,
    KeyFormatError,
    MatchError,
    MvanonError,
    PackageError,
    ProtocolError,
    TraceParseError,
)
from .migration import MigrationKeys, migrate, perm_sample, rand_indices, unmigrate
from .ppcipher import (
    MAX_ITERATIONS,
    PPKey,
    derive_key,
    load_key_file,
    pp_anonymize,
    pp_deanonymize,
    pp_iter,
)
from .privacy import (
    EpsReport,
    eps_bound,
    eps_exact,
    expected_candidates,
    make_eps_report,
    n_total,
    prob_candidate,
    prob_candidate_bruteforce,
    setup_leakage_ok,
)
from .randomness import DetRng
from .schemes import (
    OwnerSecrets,
    SeedPackage,
    build_views,
    extract_report,
    load_package,
    mark_boundaries,
    save_package,
    scheme1_owner,
    scheme1_views,
    scheme2_key_vectors,
    scheme2_owner,
    scheme2_views,
    unmark_boundaries,
)
from .synth import generate_trace
from .trace import (
    FlowRecord,
    PrefixGrouping,
    Trace,
    build_pis,
    group_by_prefix,
    load_trace,
    parse_trace,
    serialize_trace,
    shared_prefix_len,
)

__version__ = "0.1.0"
