#include "resilex/toycore/programs.hpp"

#include <stdexcept>

namespace resilex::toycore {

namespace {

// Small deterministic generator for benchmark input data.
class Lcg {
 public:
  explicit Lcg(std::uint32_t seed) : x_(seed) {}
  std::uint32_t next(std::uint32_t bound) {
    x_ = x_ * 1103515245u + 12345u;
    return (x_ >> 16) % bound;
  }

 private:
  std::uint32_t x_;
};

std::vector<std::uint32_t> random_words(std::uint32_t seed, std::size_t n, std::uint32_t bound) {
  Lcg g(seed);
  std::vector<std::uint32_t> out(n);
  for (auto& w : out) w = g.next(bound);
  return out;
}

using B = ProgramBuilder;

// Loop latch: ++counter; if counter == limit goto exit else goto top.
void loop_back(B& b, B::Reg counter, std::int16_t limit, const std::string& top, const std::string& exit) {
  b.addi(counter, counter, 1)
      .addi(10, counter, static_cast<std::int16_t>(-limit))
      .beqz(10, exit)
      .jump(top);
}

// C[M][N] = A[M][K] * B[K][N]; row strides K, N and N respectively.
void emit_matmul(B& b, const std::string& p, int m, int k, int n, std::int16_t a_base,
                 std::int16_t b_base, std::int16_t c_base) {
  b.li(1, 0).label(p + "i");
  b.li(2, 0).label(p + "j");
  b.li(3, 0).li(4, 0).li(12, static_cast<std::int16_t>(k)).mul(5, 1, 12).mov(6, 2);
  b.label(p + "k")
      .load(7, 5, a_base)
      .load(8, 6, b_base)
      .mul(9, 7, 8)
      .add(4, 4, 9)
      .addi(5, 5, 1)
      .addi(6, 6, static_cast<std::int16_t>(n));
  loop_back(b, 3, static_cast<std::int16_t>(k), p + "k", p + "kd");
  b.label(p + "kd").li(12, static_cast<std::int16_t>(n)).mul(11, 1, 12).add(11, 11, 2).store(4, 11, c_base);
  loop_back(b, 2, static_cast<std::int16_t>(n), p + "j", p + "jd");
  b.label(p + "jd");
  loop_back(b, 1, static_cast<std::int16_t>(m), p + "i", p + "id");
  b.label(p + "id");
}

}  // namespace

std::vector<std::uint32_t> matmul_input_a() { return random_words(11, kMatDim * kMatDim, 16); }
std::vector<std::uint32_t> matmul_input_b() { return random_words(23, kMatDim * kMatDim, 16); }

ToyProgram matmul_program() {
  B b("matmul");
  b.data(0, matmul_input_a()).data(64, matmul_input_b());
  emit_matmul(b, "mm_", 8, 8, 8, 0, 64, 128);
  b.li(1, 0).label("o").load(7, 1, 128).out(7);
  loop_back(b, 1, 64, "o", "end");
  b.label("end").halt();
  return b.build();
}

ToyProgram matmul_abft_program() {
  // Layout: A' (9x8, stride 8) at 0, B' (8x9, stride 9) at 100, C' (9x9) at 200.
  B b("matmul_abft");
  b.abft();
  b.data(0, matmul_input_a());
  const auto bm = matmul_input_b();
  for (unsigned r = 0; r < kMatDim; ++r) {
    for (unsigned c = 0; c < kMatDim; ++c) b.data(100 + 9 * r + c, bm[r * kMatDim + c]);
  }

  // Checksum row of A: A'[8][k] = sum_i A[i][k].
  b.li(1, 0).label("ca").li(2, 0).li(4, 0).mov(5, 1);
  b.label("ca_i").load(7, 5, 0).add(4, 4, 7).addi(5, 5, 8);
  loop_back(b, 2, 8, "ca_i", "ca_d");
  b.label("ca_d").store(4, 1, 64);
  loop_back(b, 1, 8, "ca", "ca_done");
  b.label("ca_done");

  // Checksum column of B: B'[k][8] = sum_j B[k][j].
  b.li(1, 0).label("rb").li(2, 0).li(4, 0).li(12, 9).mul(5, 1, 12);
  b.label("rb_j").load(7, 5, 100).add(4, 4, 7).addi(5, 5, 1);
  loop_back(b, 2, 8, "rb_j", "rb_d");
  b.label("rb_d").li(12, 9).mul(11, 1, 12).store(4, 11, 108);
  loop_back(b, 1, 8, "rb", "rb_done");
  b.label("rb_done");

  emit_matmul(b, "mm_", 9, 8, 9, 0, 100, 200);

  // Row check: r13 = mismatching rows, r14 = last such row, r15 = its difference.
  b.li(13, 0).li(14, 0).li(15, 0).li(1, 0);
  b.label("rc").li(2, 0).li(4, 0).li(12, 9).mul(5, 1, 12);
  b.label("rc_j").load(7, 5, 200).add(4, 4, 7).addi(5, 5, 1);
  loop_back(b, 2, 8, "rc_j", "rc_d");
  b.label("rc_d").load(7, 5, 200).sub(9, 7, 4).beqz(9, "rc_ok").addi(13, 13, 1).mov(14, 1).mov(15, 9);
  b.label("rc_ok");
  loop_back(b, 1, 8, "rc", "rc_done");
  b.label("rc_done");

  // Column check: r3 = mismatching columns, r6 = last such column.
  b.li(3, 0).li(6, 0).li(1, 0);
  b.label("cc").li(2, 0).li(4, 0).mov(5, 1);
  b.label("cc_i").load(7, 5, 200).add(4, 4, 7).addi(5, 5, 9);
  loop_back(b, 2, 8, "cc_i", "cc_d");
  b.label("cc_d").load(7, 5, 200).sub(9, 7, 4).beqz(9, "cc_ok").addi(3, 3, 1).mov(6, 1);
  b.label("cc_ok");
  loop_back(b, 1, 8, "cc", "cc_done");
  b.label("cc_done");

  // No mismatch, or a lone checksum mismatch: data is intact.
  // One row and one column: correct that element. Anything else: detect.
  b.add(10, 13, 3).beqz(10, "ok").addi(10, 10, -1).beqz(10, "ok");
  b.addi(10, 13, -1).beqz(10, "r_one").jump("detect");
  b.label("r_one").addi(10, 3, -1).beqz(10, "fix").jump("detect");
  b.label("fix").li(12, 9).mul(11, 14, 12).add(11, 11, 6).load(7, 11, 200).add(7, 7, 15).store(7, 11, 200).jump("ok");
  b.label("detect").li(7, 1).store(7, 0, -1);

  b.label("ok").li(1, 0);
  b.label("o_i").li(2, 0).li(12, 9).mul(5, 1, 12);
  b.label("o_j").load(7, 5, 200).out(7).addi(5, 5, 1);
  loop_back(b, 2, 8, "o_j", "o_jd");
  b.label("o_jd");
  loop_back(b, 1, 8, "o_i", "end");
  b.label("end").halt();
  return b.build();
}

ToyProgram dotprod_program() {
  B b("dotprod");
  b.data(0, random_words(31, 128, 256)).data(128, random_words(37, 128, 256));
  b.li(1, 0).li(4, 0).li(13, 0);
  b.label("l").load(7, 1, 0).load(8, 1, 128).mul(9, 7, 8).add(4, 4, 9).addi(1, 1, 1);
  loop_back(b, 13, 32, "l", "emit");
  b.label("emit").out(4).li(13, 0).addi(10, 1, -128).beqz(10, "end").jump("l");
  b.label("end").halt();
  return b.build();
}

ToyProgram checksum_sort_program() {
  B b("checksum_sort");
  b.data(0, random_words(41, 32, 1u << 20));
  b.li(1, 1);
  b.label("outer").load(7, 1, 0).addi(2, 1, -1);
  b.label("inner")
      .addi(10, 2, 1)
      .beqz(10, "place")
      .load(8, 2, 0)
      .sub(9, 7, 8)
      .shr(9, 9, 31)
      .beqz(9, "place")
      .store(8, 2, 1)
      .addi(2, 2, -1)
      .jump("inner");
  b.label("place").store(7, 2, 1);
  loop_back(b, 1, 32, "outer", "sorted");
  b.label("sorted").li(1, 0).li(4, 0);
  b.label("o").load(7, 1, 0).out(7).add(4, 4, 7);
  loop_back(b, 1, 32, "o", "fin");
  b.label("fin").out(4).halt();
  return b.build();
}

ToyProgram strsearch_program() {
  B b("strsearch");
  auto text = random_words(53, 128, 4);
  const std::vector<std::uint32_t> pattern = {1, 3, 0, 2};
  for (unsigned at : {9u, 47u, 90u, 121u}) {
    for (unsigned i = 0; i < pattern.size(); ++i) text[at + i] = pattern[i];
  }
  b.data(0, text).data(200, pattern);
  b.li(1, 0).li(13, 0);
  b.label("pos").li(2, 0);
  b.label("cmp").add(5, 1, 2).load(7, 5, 0).load(8, 2, 200).xor_(9, 7, 8).beqz(9, "eq").jump("next");
  b.label("eq");
  loop_back(b, 2, 4, "cmp", "found");
  b.label("found").out(1).addi(13, 13, 1);
  b.label("next");
  loop_back(b, 1, 125, "pos", "done");
  b.label("done").out(13).halt();
  return b.build();
}

ToyProgram crc_program() {
  B b("crc");
  b.data(0, random_words(61, 64, 1u << 30));
  b.li(1, 0).li(4, 0x1234).li(13, 0);
  b.label("l")
      .load(7, 1, 0)
      .xor_(4, 4, 7)
      .shl(9, 4, 13)
      .xor_(4, 4, 9)
      .shr(9, 4, 17)
      .xor_(4, 4, 9)
      .shl(9, 4, 5)
      .xor_(4, 4, 9)
      .addi(1, 1, 1);
  loop_back(b, 13, 8, "l", "emit");
  b.label("emit").out(4).li(13, 0).addi(10, 1, -64).beqz(10, "end").jump("l");
  b.label("end").halt();
  return b.build();
}

ToyProgram fib_program() {
  B b("fib");
  b.li(1, 0).li(2, 1).li(3, 0);
  b.label("l").out(1).add(4, 1, 2).mov(1, 2).mov(2, 4);
  loop_back(b, 3, 40, "l", "end");
  b.label("end").halt();
  return b.build();
}

ToyProgram prefix_sum_program() {
  B b("prefix_sum");
  b.data(0, random_words(71, 64, 1000));
  b.li(1, 1);
  b.label("l").load(7, 1, -1).load(8, 1, 0).add(8, 8, 7).store(8, 1, 0);
  loop_back(b, 1, 64, "l", "out");
  b.label("out").li(1, 0);
  b.label("o").load(7, 1, 0).out(7);
  loop_back(b, 1, 64, "o", "end");
  b.label("end").halt();
  return b.build();
}

std::vector<ToyProgram> bundled_programs() {
  return {matmul_program(),   matmul_abft_program(), dotprod_program(), checksum_sort_program(),
          strsearch_program(), crc_program(),        fib_program(),     prefix_sum_program()};
}

std::vector<std::string> bundled_program_names() {
  return {"matmul", "matmul_abft", "dotprod", "checksum_sort", "strsearch", "crc", "fib", "prefix_sum"};
}

ToyProgram bundled_program(const std::string& name) {
  for (auto& p : bundled_programs()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& n : bundled_program_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown benchmark '" + name + "' (available: " + known + ")");
}

}  // namespace resilex::toycore
