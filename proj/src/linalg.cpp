namespace ulab {}
