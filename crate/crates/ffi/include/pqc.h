#ifndef PQC_H
#define PQC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PqcStatus {
  PQC_STATUS_OK = 0,
  PQC_STATUS_NULL_POINTER = 1,
  PQC_STATUS_INVALID_UTF8 = 2,
  PQC_STATUS_PARSE = 3,
  PQC_STATUS_INVALID_ARGUMENT = 4,
  PQC_STATUS_COMPUTE = 5,
  PQC_STATUS_PANIC = 6,
} PqcStatus;

// A parsed Clifford+T circuit.
typedef struct PqcCircuit PqcCircuit;

// A parsed stabilizer Hamiltonian.
typedef struct PqcHamiltonian PqcHamiltonian;

// A finished run: pass flag plus its rendered report.
typedef struct PqcReport PqcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library on the same thread.
const char *pqc_last_error_message(void);

// Static, NUL-terminated version string.
const char *pqc_version(void);

// # Safety
// `src` must be a NUL-terminated string and `out` writable.
enum PqcStatus pqc_circuit_parse(const char *src, struct PqcCircuit **out);

// # Safety
// `circuit` must come from [`pqc_circuit_parse`] or be null.
void pqc_circuit_free(struct PqcCircuit *circuit);

// Qubit count, or 0 for a null handle.
//
// # Safety
// `circuit` must be a live handle or null.
size_t pqc_circuit_num_qubits(const struct PqcCircuit *circuit);

// `<alpha| H^n U |0^n>` through the Pauli pipeline, with the statevector
// value alongside. Any output pointer may be null.
//
// # Safety
// `circuit` must be a live handle, `alpha` a NUL-terminated bit string.
enum PqcStatus pqc_amplitude(const struct PqcCircuit *circuit,
                             const char *alpha,
                             double *pqc_re,
                             double *pqc_im,
                             double *oracle_re,
                             double *oracle_im);

// # Safety
// `src` must be a NUL-terminated string and `out` writable.
enum PqcStatus pqc_hamiltonian_parse(const char *src, struct PqcHamiltonian **out);

// # Safety
// `h` must come from [`pqc_hamiltonian_parse`] or be null.
void pqc_hamiltonian_free(struct PqcHamiltonian *h);

// Integrates the block Lindbladian to `t_max` with step `dt`.
//
// # Safety
// `h` must be a live handle and `out` writable.
enum PqcStatus pqc_lindblad(const struct PqcHamiltonian *h,
                            double t_max,
                            double dt,
                            struct PqcReport **out);

// Recovers the planted bit string `target`.
//
// # Safety
// `target` must be a NUL-terminated bit string and `out` writable.
enum PqcStatus pqc_search(const char *target, uint64_t seed, struct PqcReport **out);

// Checks the gate library. A non-positive `tolerance` keeps the default.
//
// # Safety
// `out` must be writable.
enum PqcStatus pqc_verify_gates(double tolerance, struct PqcReport **out);

// Runs every numbered check.
//
// # Safety
// `out` must be writable.
enum PqcStatus pqc_run_all(uint64_t seed, struct PqcReport **out);

// # Safety
// `r` must be a live handle or null.
bool pqc_report_pass(const struct PqcReport *r);

// JSON text owned by the report; null for a null handle.
//
// # Safety
// `r` must be a live handle or null.
const char *pqc_report_json(const struct PqcReport *r);

// # Safety
// `r` must come from one of the report-producing calls or be null.
void pqc_report_free(struct PqcReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PQC_H */
