#include <wildscalar/wildscalar.hpp>
