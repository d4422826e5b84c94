# CERTIFIED-BOUNDS ENGINE
DEFAULT_MEMORY_CAP = 8
MAX_ENUMERATED_STRATEGIES = 4096
MAX_TEMPLATE_ROUNDS = 256

# MEAN-PAYOFF VALUE ITERATION
MAX_VALUE_ITERATION_STEPS = 50_000_000

# PARALLELISM
WORKERS = 1

# ORACLE
ORACLE_MAX_STATES = 12
ORACLE_MAX_STRATEGIES = 1 << 15
ORACLE_MAX_CYCLES = 100_000

# FILES
FIXTURE_SUFFIXES = ('.qa', '.game', '.mealy')
