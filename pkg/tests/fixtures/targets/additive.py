"""Three independent Boolean savings: x saves 0.30, y 0.20, z 0.10 from a 1.0 baseline."""

from _flags import parse

SAVINGS = {"x": 0.30, "y": 0.20, "z": 0.10}

flags, _ = parse()
runtime = 1.0 - sum(saving for name, saving in SAVINGS.items() if flags.get(name) == "true")
print(f"RESULT: {runtime:.6f}")
