//! Holds the `acceptance` test target, which runs every published criterion
//! against the simulator and prints one PASS/FAIL line per criterion.
