#include <pybind11/pybind11.h>
PYBIND11_MODULE(_medmagma, m) { m.doc() = "medmagma"; }
