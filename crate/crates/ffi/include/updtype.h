#ifndef UPDTYPE_H
#define UPDTYPE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum UpdStatus {
  UPD_STATUS_OK = 0,
  UPD_STATUS_NULL_ARGUMENT = 1,
  UPD_STATUS_INVALID_UTF8 = 2,
  UPD_STATUS_PARSE = 3,
  UPD_STATUS_NOT_FOUND = 4,
  UPD_STATUS_UNSUPPORTED = 5,
  UPD_STATUS_CLOSURE = 6,
  UPD_STATUS_PANIC = 7,
} UpdStatus;

/**
 * A regular or context-free hedge automaton.
 */
typedef struct UpdAutomaton UpdAutomaton;

/**
 * A parsed set of workspace files.
 */
typedef struct UpdWorkspace UpdWorkspace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *upd_last_error(void);

/**
 * Parses workspace text into a new handle.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum UpdStatus upd_workspace_parse(const char *source, struct UpdWorkspace **out);

/**
 * # Safety
 * `ws` must come from [`upd_workspace_parse`] and not be freed twice.
 */
void upd_workspace_free(struct UpdWorkspace *ws);

/**
 * Copies a named automaton out of a workspace.
 *
 * # Safety
 * Pointers must be valid; `name` NUL-terminated.
 */
enum UpdStatus upd_workspace_automaton(const struct UpdWorkspace *ws,
                                       const char *name,
                                       struct UpdAutomaton **out);

/**
 * # Safety
 * `a` must come from this library and not be freed twice.
 */
void upd_automaton_free(struct UpdAutomaton *a);

/**
 * Whether the automaton has no collapsing or grammar rules.
 *
 * # Safety
 * Pointers must be valid.
 */
enum UpdStatus upd_automaton_is_regular(const struct UpdAutomaton *a, bool *out);

/**
 * Runs the automaton on a term such as `"g(a b)"`.
 *
 * # Safety
 * Pointers must be valid; `term` NUL-terminated.
 */
enum UpdStatus upd_automaton_accepts(const struct UpdAutomaton *a, const char *term, bool *out);

/**
 * Stores a member term in `*out`, or null when the language is empty.
 * A non-null result is released with [`upd_string_free`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum UpdStatus upd_automaton_member(const struct UpdAutomaton *a, char **out);

/**
 * Serializes the automaton in workspace syntax under `name`.
 *
 * # Safety
 * Pointers must be valid; `name` NUL-terminated.
 */
enum UpdStatus upd_automaton_write(const struct UpdAutomaton *a, const char *name, char **out);

/**
 * Forward closure of `input` under the named rule set. Regular input with
 * XACU rules gives a regular automaton, anything else a context-free one.
 *
 * # Safety
 * Pointers must be valid; `rules` NUL-terminated.
 */
enum UpdStatus upd_post_star(const struct UpdWorkspace *ws,
                             const char *rules,
                             const struct UpdAutomaton *input,
                             struct UpdAutomaton **out);

/**
 * Backward closure of a regular `output` under the named rule set.
 *
 * # Safety
 * Pointers must be valid; `rules` NUL-terminated.
 */
enum UpdStatus upd_pre_star(const struct UpdWorkspace *ws,
                            const char *rules,
                            const struct UpdAutomaton *output,
                            struct UpdAutomaton **out);

/**
 * Checks that every update of a `tau_in` document stays in `tau_out`.
 * On failure `*witness` receives a counterexample (release it with
 * [`upd_string_free`]); otherwise it is set to null.
 *
 * # Safety
 * Pointers must be valid; `rules` NUL-terminated.
 */
enum UpdStatus upd_typecheck(const struct UpdWorkspace *ws,
                             const char *rules,
                             const struct UpdAutomaton *tau_in,
                             const struct UpdAutomaton *tau_out,
                             bool *holds,
                             char **witness);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void upd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UPDTYPE_H */
