#include <stdio.h>
#include "util/list.h"
#  include <sys/types.h>
// #include <commented.h>

int main(void) { return 0; }
