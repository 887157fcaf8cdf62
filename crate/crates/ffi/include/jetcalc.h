#ifndef JETCALC_H
#define JETCALC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum JcStatus {
  JC_STATUS_OK = 0,
  JC_STATUS_NULL_ARGUMENT = 1,
  JC_STATUS_INVALID_UTF8 = 2,
  /**
   * Syntax error or undeclared name in the input text.
   */
  JC_STATUS_PARSE = 3,
  /**
   * Operator, symmetry, variable or law not declared in the system.
   */
  JC_STATUS_UNKNOWN_NAME = 4,
  /**
   * The computation itself failed (e.g. no Kovalevskaya form found).
   */
  JC_STATUS_COMPUTATION = 5,
  /**
   * The system lacks a block the call needs (e.g. a Lagrangian).
   */
  JC_STATUS_MISSING_INPUT = 6,
  /**
   * A bug inside the library; the handle should be discarded.
   */
  JC_STATUS_PANIC = 7,
} JcStatus;

/**
 * Decision of an equality or property check.
 */
typedef enum JcVerdict {
  JC_VERDICT_PROVED_EQUAL = 0,
  JC_VERDICT_PROVED_UNEQUAL = 1,
  JC_VERDICT_PROBABLY_EQUAL = 2,
} JcVerdict;

/**
 * A parsed system description.
 */
typedef struct JcSystem JcSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *jc_last_error(void);

/**
 * Library version as a static string.
 */
const char *jc_version(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void jc_string_free(char *s);

/**
 * Parses a system description (`.pde` text).
 *
 * # Safety
 * `source` must be a nul-terminated string; `out` a valid pointer.
 */
enum JcStatus jc_system_parse(const char *source, struct JcSystem **out);

/**
 * Releases a system. Null is ignored.
 *
 * # Safety
 * `sys` must come from [`jc_system_parse`] and not have been freed.
 */
void jc_system_free(struct JcSystem *sys);

/**
 * Canonical text of the system.
 *
 * # Safety
 * `sys` must be a live handle; `out` a valid pointer.
 */
enum JcStatus jc_system_print(const struct JcSystem *sys, char **out);

/**
 * Euler-Lagrange expressions of the system's Lagrangian, one per line.
 *
 * # Safety
 * `sys` must be a live handle; `out` a valid pointer.
 */
enum JcStatus jc_euler(const struct JcSystem *sys, char **out);

/**
 * Universal linearization of the equations.
 *
 * # Safety
 * `sys` must be a live handle; `out` a valid pointer.
 */
enum JcStatus jc_linearize(const struct JcSystem *sys, char **out);

/**
 * Helmholtz test of the equations. `out_difference`, if not null, receives
 * the text of `l - l*`.
 *
 * # Safety
 * `sys` must be a live handle; `out_verdict` a valid pointer.
 */
enum JcStatus jc_check_variational(const struct JcSystem *sys,
                                   uint64_t seed,
                                   uint32_t trials,
                                   enum JcVerdict *out_verdict,
                                   char **out_difference);

/**
 * Searches for a Kovalevskaya form in `direction` and validates it.
 * `out_orders` (length = number of dependents) receives the solved orders;
 * `out_form`, if not null, the solved equations one per line.
 *
 * # Safety
 * `sys` must be a live handle; `direction` a nul-terminated string;
 * `out_orders` must have room for one entry per dependent variable.
 */
enum JcStatus jc_kovalevskaya(const struct JcSystem *sys,
                              const char *direction,
                              uint32_t *out_orders,
                              char **out_form);

/**
 * Number of dependent variables of the system.
 *
 * # Safety
 * `sys` must be a live handle or null (which yields 0).
 */
size_t jc_system_dependents(const struct JcSystem *sys);

/**
 * Decides `lhs = rhs` for two expressions in the system's variables.
 *
 * # Safety
 * `sys` must be a live handle; `lhs`, `rhs` nul-terminated strings;
 * `out_verdict` a valid pointer.
 */
enum JcStatus jc_equals(const struct JcSystem *sys,
                        const char *lhs,
                        const char *rhs,
                        uint64_t seed,
                        uint32_t trials,
                        enum JcVerdict *out_verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JETCALC_H */
