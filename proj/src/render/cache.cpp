#include "gsp/render/cache.hpp"

#include <fstream>
#include <iterator>

#include "gsp/error.hpp"

namespace gsp::render {

StimulusStore::StimulusStore(Renderer& renderer, Retention retention, std::filesystem::path dir)
    : renderer_(renderer), retention_(retention), dir_(std::move(dir)) {
  if (retention_ == Retention::disk) {
    if (dir_.empty()) throw Error(Errc::config, "disk retention needs a stimulus directory");
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(Errc::io, "cannot create " + dir_.string() + ": " + ec.message());
  }
}

std::filesystem::path StimulusStore::path_for(const std::string& id) const { return dir_ / (id + ".wav"); }

std::string StimulusStore::reserve(const LatentPoint& point, const SentenceRef& sentence) {
  std::string id = renderer_.stimulus_id(point, sentence);
  std::lock_guard lock(mutex_);
  entries_.try_emplace(id, Entry{point, sentence, {}});
  return id;
}

std::string StimulusStore::ensure(const LatentPoint& point, const SentenceRef& sentence) {
  std::string id = reserve(point, sentence);
  materialize(id);
  return id;
}

std::shared_ptr<const StimulusStore::Rendered> StimulusStore::materialize(const std::string& id) {
  std::promise<std::shared_ptr<const Rendered>> promise;
  Entry snapshot;
  {
    std::unique_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return nullptr;
    if (it->second.result.valid()) {
      ++hits_;
      auto future = it->second.result;
      // Another thread may still be rendering; wait without holding the lock.
      lock.unlock();
      return future.get();
    }
    it->second.result = promise.get_future().share();
    snapshot = it->second;
  }

  try {
    RenderOutput out = renderer_.render(snapshot.point, snapshot.sentence);
    auto rendered = std::make_shared<Rendered>();
    rendered->embedding = std::move(out.style_embedding);
    if (retention_ == Retention::memory) {
      rendered->wav = encode_wav(out.audio);
    } else if (retention_ == Retention::disk) {
      write_wav(path_for(id), out.audio);
    }
    promise.set_value(rendered);
    std::lock_guard lock(mutex_);
    ++renders_;
    return rendered;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mutex_);
    // Forget the failure so a later request can retry.
    entries_[id].result = {};
    throw;
  }
}

bool StimulusStore::contains(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return entries_.contains(id);
}

std::optional<std::vector<std::uint8_t>> StimulusStore::wav(const std::string& id) {
  auto rendered = materialize(id);
  if (!rendered) return std::nullopt;
  if (retention_ == Retention::memory) return rendered->wav;
  if (retention_ == Retention::disk) {
    std::ifstream in(path_for(id), std::ios::binary);
    if (!in) throw Error(Errc::io, "missing stimulus file for " + id);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
  }
  Entry entry;
  {
    std::lock_guard lock(mutex_);
    entry = entries_.at(id);
  }
  return encode_wav(renderer_.render(entry.point, entry.sentence).audio);
}

std::optional<AudioBuffer> StimulusStore::audio(const std::string& id) {
  auto bytes = wav(id);
  if (!bytes) return std::nullopt;
  return decode_wav(*bytes);
}

std::optional<std::vector<double>> StimulusStore::embedding(const std::string& id) {
  auto rendered = materialize(id);
  if (!rendered) return std::nullopt;
  return rendered->embedding;
}

std::size_t StimulusStore::renders() const {
  std::lock_guard lock(mutex_);
  return renders_;
}

std::size_t StimulusStore::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::vector<std::string> render_slider_batch(const ChainState& chain, const SliderGrid& grid, const SentenceRef& sentence,
                                             StimulusStore& store) {
  if (chain.complete()) throw Error(Errc::state, "chain " + std::to_string(chain.spec.chain_id) + " is complete");
  if (chain.free_dimension < 0 || chain.free_dimension >= static_cast<int>(chain.current_point.dimensions())) {
    throw Error(Errc::shape, "free dimension out of range");
  }
  std::vector<std::string> ids(static_cast<std::size_t>(grid.size()));
  std::vector<int> failed;
  std::string last_error;
  for (int k = 0; k < grid.size(); ++k) {
    LatentPoint point = chain.current_point;
    point.indices[static_cast<std::size_t>(chain.free_dimension)] = k;
    bool done = false;
    for (int attempt = 0; attempt < 2 && !done; ++attempt) {
      try {
        ids[static_cast<std::size_t>(k)] = store.ensure(point, sentence);
        done = true;
      } catch (const Error& e) {
        if (e.code() == Errc::shape || e.code() == Errc::range) throw;
        last_error = e.what();
      }
    }
    if (!done) failed.push_back(k);
  }
  if (!failed.empty()) {
    throw BatchError(failed, std::to_string(failed.size()) + " of " + std::to_string(grid.size()) +
                                 " slider positions failed to render: " + last_error);
  }
  return ids;
}

}  // namespace gsp::render
