# Tests placeholder
