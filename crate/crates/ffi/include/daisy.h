#ifndef DAISY_H
#define DAISY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every call.
typedef enum DaisyStatus {
  DAISY_STATUS_OK = 0,
  DAISY_STATUS_NULL_POINTER = 1,
  DAISY_STATUS_INVALID_UTF8 = 2,
  DAISY_STATUS_PARSE_ERROR = 3,
  DAISY_STATUS_INVALID_ARGUMENT = 4,
  DAISY_STATUS_INTERNAL = 5,
} DaisyStatus;

// Result of a repeat identification run.
typedef struct DaisyOutcome DaisyOutcome;

// Parsed protein structure.
typedef struct DaisyStructure DaisyStructure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call on the same thread.
const char *daisy_last_error(void);

// Library version as a static string.
const char *daisy_version(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void daisy_string_free(char *s);

// Parse PDB text into a new structure handle.
//
// # Safety
// `pdb_text` must be a NUL-terminated string; `out` a valid pointer.
enum DaisyStatus daisy_structure_parse(const char *pdb_text, struct DaisyStructure **out);

// Release a structure handle. NULL is ignored.
//
// # Safety
// `s` must come from [`daisy_structure_parse`] and not be freed twice.
void daisy_structure_free(struct DaisyStructure *s);

// Number of chains.
//
// # Safety
// Pointers must be valid.
enum DaisyStatus daisy_structure_chain_count(const struct DaisyStructure *s, size_t *out);

// Total residue count over all chains.
//
// # Safety
// Pointers must be valid.
enum DaisyStatus daisy_structure_residue_count(const struct DaisyStructure *s, size_t *out);

// FASTA of every chain, headers `>{accession}_{chain}`.
//
// # Safety
// Pointers must be valid; free the result with [`daisy_string_free`].
enum DaisyStatus daisy_structure_fasta(const struct DaisyStructure *s, char **out);

// Optimal superposition of `n` points `mobile` onto `target` (xyz triples).
// Writes a row-major 3x3 rotation, a translation and the RMSD.
//
// # Safety
// `mobile` and `target` must hold `3 * n` doubles, `rotation` 9,
// `translation` 3.
enum DaisyStatus daisy_kabsch(const double *mobile,
                              const double *target,
                              size_t n,
                              double *rotation,
                              double *translation,
                              double *rmsd);

// Detect repeat regions with the bundled unit library. `subclasses` is a
// comma-separated list of subclass ids, or NULL/empty for all.
//
// # Safety
// `s` must be a live structure handle, `subclasses` NULL or a
// NUL-terminated string, `out` a valid pointer.
enum DaisyStatus daisy_identify(const struct DaisyStructure *s,
                                const char *subclasses,
                                struct DaisyOutcome **out);

// Number of regions over all chains.
//
// # Safety
// Pointers must be valid.
enum DaisyStatus daisy_outcome_region_count(const struct DaisyOutcome *o, size_t *out);

// Full outcome as JSON.
//
// # Safety
// Pointers must be valid; free the result with [`daisy_string_free`].
enum DaisyStatus daisy_outcome_json(const struct DaisyOutcome *o, char **out);

// Release an outcome handle. NULL is ignored.
//
// # Safety
// `o` must come from [`daisy_identify`] and not be freed twice.
void daisy_outcome_free(struct DaisyOutcome *o);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DAISY_H */
