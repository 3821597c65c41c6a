#include <pybind11/pybind11.h>
PYBIND11_MODULE(_sptlaw, m) { m.doc() = "placeholder"; }
